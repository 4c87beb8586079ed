"""Tests for behavior models, the offline updates and the tabular oracles."""

import math
import os
import tempfile
from dataclasses import replace

import numpy as np
import pytest

from aoscontrol.config import SystemConfig
from aoscontrol.core.agents import RandomPolicy, constrained_argmax
from aoscontrol.core.dataset import collect, mix
from aoscontrol.core.env import NcsEnv, evaluate_policy
from aoscontrol.core.errors import NonFiniteError
from aoscontrol.core.net import Mlp, load_checkpoint
from aoscontrol.core.offline import (
    NeuralBehaviorModel,
    OfflineTrainer,
    TabularBehaviorModel,
    TabularMdp,
    TransitionArrays,
    audit_margin,
    fit_behavior,
    offline_checkpoint_nets,
    policy_evaluation,
    support_from_probabilities,
    train_offline,
    value_iteration,
)
from aoscontrol.core.seeding import derive_rng
from aoscontrol.core.types import Action, EnvState


def deterministic_mdp(rewards: np.ndarray) -> TabularMdp:
    """Two states; action ``a`` moves to state ``a % 2``."""
    num_states, num_actions = rewards.shape
    transitions = np.zeros((num_states, num_actions, num_states))
    for s in range(num_states):
        for a in range(num_actions):
            transitions[s, a, a % num_states] = 1.0
    return TabularMdp(transitions, rewards)


def tabular_arrays(mdp: TabularMdp, pairs, support: np.ndarray) -> TransitionArrays:
    """Dataset of (state, action) pairs with one-hot state features."""
    eye = np.eye(mdp.num_states)
    states = np.array([s for s, _ in pairs])
    actions = np.array([a for _, a in pairs], dtype=np.int64)
    next_states = np.array([int(np.argmax(mdp.transitions[s, a])) for s, a in pairs])
    return TransitionArrays(
        states=eye[states],
        actions=actions,
        rewards=mdp.rewards[states, actions].astype(np.float64),
        next_states=eye[next_states],
        support=support[states],
        next_support=support[next_states],
    )


def small_config(**overrides: object) -> SystemConfig:
    base = replace(
        SystemConfig(),
        hidden_dim=8,
        batch_size=32,
        iterations=3,
        steps_per_iteration=5,
        eval_realizations=50,
        episode_length=100,
        behavior_mode="tabular",
        checkpoint_every=1,
    )
    return replace(base, **overrides)


def random_dataset(cfg: SystemConfig, size: int = 300, seed: int = 0):  # type: ignore[no-untyped-def]
    return collect(RandomPolicy(cfg.num_relays), NcsEnv(cfg), size, seed).records


# ---------------------------------------------------------------------------
# Oracles


def test_value_iteration_single_state() -> None:
    """Test the closed-form fixed point of a one-state MDP."""
    mdp = TabularMdp(np.ones((1, 2, 1)), np.array([[0.0, 1.0]]))
    result = value_iteration(mdp, 0.5)
    np.testing.assert_allclose(result.q, [[1.0, 2.0]], atol=1e-9)
    assert result.policy[0] == 1


def test_value_iteration_zero_rewards() -> None:
    """Test that zero rewards give zero values."""
    mdp = deterministic_mdp(np.zeros((2, 2)))
    assert not value_iteration(mdp, 0.9).q.any()


def test_value_iteration_shift_invariance() -> None:
    """Test that a constant reward shift keeps the greedy policy."""
    rewards = np.array([[0.0, 1.0], [0.5, 0.0]])
    base = value_iteration(deterministic_mdp(rewards), 0.8)
    shifted = value_iteration(deterministic_mdp(rewards + 3.0), 0.8)
    np.testing.assert_array_equal(base.policy, shifted.policy)
    np.testing.assert_allclose(shifted.q - base.q, 3.0 / 0.2, atol=1e-8)


def test_value_iteration_rejects_gamma_one() -> None:
    """Test the discount precondition."""
    with pytest.raises(ValueError):
        value_iteration(deterministic_mdp(np.zeros((2, 2))), 1.0)


def test_policy_evaluation_matches_value_iteration() -> None:
    """Test that the optimal policy's value equals max Q*."""
    mdp = deterministic_mdp(np.array([[0.0, 1.0], [0.5, 0.0]]))
    result = value_iteration(mdp, 0.5)
    np.testing.assert_allclose(policy_evaluation(mdp, result.policy, 0.5), result.q.max(axis=1), atol=1e-9)


# ---------------------------------------------------------------------------
# Behavior models


def test_tabular_counting() -> None:
    """Test exact frequencies for one key."""
    model = TabularBehaviorModel.from_keys(["K"] * 4, [2, 2, 2, 0], 6, 0.1)
    probs = model.probabilities_for_keys(["K"])[0]
    np.testing.assert_allclose(probs, [0.25, 0.0, 0.75, 0.0, 0.0, 0.0])
    assert abs(probs.sum() - 1.0) < 1e-9


def test_single_action_support() -> None:
    """Test that a single-action dataset supports only that action."""
    model = TabularBehaviorModel.from_keys(["a", "b", "a"], [3, 3, 3], 6, 0.1)
    support = model.support_for_keys(["a", "b"])
    expected = np.zeros(6, dtype=bool)
    expected[3] = True
    assert (support == expected).all()


def test_unseen_key_uses_overall_frequency() -> None:
    """Test the fallback for keys outside the dataset."""
    model = TabularBehaviorModel.from_keys(["a", "b"], [0, 1], 2, 0.1)
    np.testing.assert_allclose(model.probabilities_for_keys(["z"])[0], [0.5, 0.5])


def test_support_threshold_is_relative() -> None:
    """Test the support rule against the row maximum."""
    support = support_from_probabilities(np.array([0.6, 0.05, 0.35]), 0.1)
    assert support.tolist() == [[True, False, True]]


def test_fit_behavior_on_environment_data() -> None:
    """Test tabular fitting on collected transitions."""
    cfg = small_config()
    dataset = random_dataset(cfg)
    model = fit_behavior(dataset, cfg, "tabular", cfg.support_threshold)
    states = [e.state for e in dataset[:50]]
    probs = model.probabilities(states)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert model.support(states).any(axis=1).all()

    with pytest.raises(ValueError):
        fit_behavior([], cfg, "tabular", 0.1)
    with pytest.raises(ValueError):
        fit_behavior(dataset, cfg, "oracle", 0.1)


def test_neural_cloning_matches_counts() -> None:
    """Test cloned probabilities against exact counts on discrete inputs."""
    rng = derive_rng(0, "test.offline")
    distributions = np.array([[0.7, 0.2, 0.1], [0.1, 0.1, 0.8], [0.3, 0.4, 0.3]])
    keys = rng.integers(3, size=3000)
    actions = np.array([rng.choice(3, p=distributions[k]) for k in keys])
    features = np.eye(3)[keys]

    net = NeuralBehaviorModel.fit_classifier(features, actions, 3, rng, hidden_dim=16, learning_rate=1e-2)
    cloned = NeuralBehaviorModel(net, lambda state: state, 0.1).probabilities_features(np.eye(3))
    counted = TabularBehaviorModel.from_keys(list(keys), actions, 3, 0.1).probabilities_for_keys([0, 1, 2])
    total_variation = 0.5 * np.abs(cloned - counted).sum(axis=1)
    assert total_variation.mean() < 0.05


# ---------------------------------------------------------------------------
# Updates


def test_penalty_vanishes_with_full_support() -> None:
    """Test that an empty out-of-support set contributes no penalty."""
    rng = derive_rng(1, "test.offline")
    trainer = OfflineTrainer(3, 4, rng, hidden_dim=8)
    q = trainer.q_values(rng.standard_normal((5, 3)))
    penalty, grad = trainer.margin_penalty(q, np.ones((5, 4), dtype=bool))
    assert penalty == 0.0
    assert not grad.any()


def test_margin_penalty_gradient() -> None:
    """Test the hinge gradient against finite differences."""
    rng = derive_rng(2, "test.offline")
    trainer = OfflineTrainer(3, 4, rng, margin=0.5)
    q = rng.standard_normal((6, 4))
    support = rng.random((6, 4)) < 0.5
    support[np.arange(6), rng.integers(4, size=6)] = True
    _, grad = trainer.margin_penalty(q, support)
    h = 1e-6
    for index in np.ndindex(q.shape):
        bumped = q.copy()
        bumped[index] += h
        lowered = q.copy()
        lowered[index] -= h
        numeric = (trainer.margin_penalty(bumped, support)[0] - trainer.margin_penalty(lowered, support)[0]) / (2 * h)
        assert numeric == pytest.approx(grad[index], abs=1e-6)


def _batch(rng: np.random.Generator, n: int = 16, dim: int = 3, actions: int = 4) -> TransitionArrays:
    support = rng.random((n, actions)) < 0.6
    support[:, 0] = True
    next_support = rng.random((n, actions)) < 0.6
    next_support[:, 1] = True
    return TransitionArrays(
        states=rng.standard_normal((n, dim)),
        actions=rng.integers(actions, size=n),
        rewards=-rng.random(n),
        next_states=rng.standard_normal((n, dim)),
        support=support,
        next_support=next_support,
    )


def test_zero_penalty_weight_is_constrained_td() -> None:
    """Test that lambda = 0 reports exactly the constrained TD loss."""
    batch = _batch(derive_rng(3, "test.offline"))
    first = OfflineTrainer(3, 4, derive_rng(4, "test.offline"), penalty_weight=0.0)
    second = OfflineTrainer(3, 4, derive_rng(4, "test.offline"), penalty_weight=0.0)
    expected = second.td_loss(batch, constrained=True)
    losses = first.offline_update(batch)
    assert losses.total_loss == expected
    assert losses.td_loss == expected


def test_zero_cql_weight_is_plain_td() -> None:
    """Test that alpha_cql = 0 reports exactly the unconstrained TD loss."""
    batch = _batch(derive_rng(5, "test.offline"))
    first = OfflineTrainer(3, 4, derive_rng(6, "test.offline"), scheme="cql", cql_alpha=0.0)
    second = OfflineTrainer(3, 4, derive_rng(6, "test.offline"), scheme="cql", cql_alpha=0.0)
    expected = second.td_loss(batch, constrained=False)
    assert first.cql_update(batch).total_loss == expected


def test_cql_logsumexp_of_flat_q() -> None:
    """Test the conservative term on an all-zero Q-network."""
    trainer = OfflineTrainer(3, 2, derive_rng(7, "test.offline"), scheme="cql")
    trainer.qnet = Mlp.zeros(3, 8, 2)
    trainer.target = Mlp.zeros(3, 8, 2)
    trainer.opt = type(trainer.opt).for_net(trainer.qnet, 1e-3)
    losses = trainer.cql_update(_batch(derive_rng(8, "test.offline"), actions=2))
    assert losses.penalty_loss == pytest.approx(math.log(2.0))


def test_target_network_sync() -> None:
    """Test that the target network copies the Q-network on schedule."""
    rng = derive_rng(9, "test.offline")
    trainer = OfflineTrainer(3, 4, rng, target_sync_steps=3)
    batch = _batch(rng)
    initial_target = trainer.target.copy()
    trainer.update(batch)
    trainer.update(batch)
    np.testing.assert_array_equal(trainer.target.w1, initial_target.w1)
    trainer.update(batch)
    np.testing.assert_array_equal(trainer.target.w1, trainer.qnet.w1)


def test_non_finite_loss_aborts_update() -> None:
    """Test that a NaN reward raises without touching parameters."""
    rng = derive_rng(10, "test.offline")
    trainer = OfflineTrainer(3, 4, rng)
    batch = _batch(rng)
    batch.rewards[0] = np.nan
    before = trainer.qnet.copy()
    with pytest.raises(NonFiniteError):
        trainer.update(batch)
    np.testing.assert_array_equal(trainer.qnet.w2, before.w2)
    assert trainer.updates == 0


def _fit(trainer: OfflineTrainer, arrays: TransitionArrays, steps: int) -> None:
    for step in range(steps):
        if step == steps // 2:
            trainer.opt.learning_rate /= 10.0
        trainer.update(arrays)


def test_full_coverage_learns_optimal_values() -> None:
    """Test convergence to the value-iteration fixed point."""
    mdp = deterministic_mdp(np.array([[0.0, 1.0], [0.5, 0.0]]))
    q_star = value_iteration(mdp, 0.5).q
    pairs = [(s, a) for s in range(2) for a in range(2)]
    arrays = tabular_arrays(mdp, pairs, np.ones((2, 2), dtype=bool))

    trainer = OfflineTrainer(
        2, 2, derive_rng(11, "test.offline"), hidden_dim=32, gamma=0.5,
        penalty_weight=0.0, target_sync_steps=100, learning_rate=1e-2,
    )
    _fit(trainer, arrays, 12_000)
    learned = trainer.q_values(np.eye(2))
    assert np.max(np.abs(learned - q_star)) < 1e-2


def test_cql_recovers_optimal_policy() -> None:
    """Test CQL's greedy policy on the tiny full-coverage MDP."""
    mdp = deterministic_mdp(np.array([[0.0, 1.0], [0.5, 0.0]]))
    optimum = value_iteration(mdp, 0.5).policy
    pairs = [(s, a) for s in range(2) for a in range(2)]
    arrays = tabular_arrays(mdp, pairs, np.ones((2, 2), dtype=bool))

    trainer = OfflineTrainer(
        2, 2, derive_rng(12, "test.offline"), scheme="cql", hidden_dim=32, gamma=0.5,
        cql_alpha=0.1, target_sync_steps=100, learning_rate=1e-2,
    )
    _fit(trainer, arrays, 6_000)
    greedy = np.argmax(trainer.q_values(np.eye(2)), axis=1)
    np.testing.assert_array_equal(greedy, optimum)


def test_constrained_policy_improves_on_empirical_policy() -> None:
    """Test policy improvement and the margin audit on a partially covered MDP."""
    rewards = np.array([[0.0, 1.0, 3.0], [0.5, 0.0, 3.0]])
    mdp = deterministic_mdp(rewards)
    pairs = [(s, a) for s in range(2) for a in range(2)] * 4
    behavior = TabularBehaviorModel.from_keys([s for s, _ in pairs], [a for _, a in pairs], 3, 0.1)
    support = behavior.support_for_keys([0, 1])
    assert support.tolist() == [[True, True, False], [True, True, False]]
    arrays = tabular_arrays(mdp, pairs, support)

    trainer = OfflineTrainer(
        2, 3, derive_rng(13, "test.offline"), hidden_dim=32, gamma=0.5,
        penalty_weight=1.0, margin=1.0, target_sync_steps=100, learning_rate=1e-2,
    )
    _fit(trainer, arrays, 8_000)

    q = trainer.q_values(np.eye(2))
    greedy = np.array([constrained_argmax(q[s], support[s]) for s in range(2)])
    assert greedy.tolist() == [1, 0]

    empirical = behavior.probabilities_for_keys([0, 1])
    improved = policy_evaluation(mdp, greedy, 0.5)
    baseline = policy_evaluation(mdp, empirical, 0.5)
    assert np.all(improved >= baseline - 1e-9)

    audit = audit_margin(trainer, arrays, len(arrays), derive_rng(14, "test.offline"))
    assert audit.audited == len(arrays)
    assert audit.satisfied_fraction >= 0.95


class BestRelayPolicy:
    """Always samples through the relay with the strongest bottleneck hop."""

    def __init__(self, num_relays: int) -> None:
        self.num_relays = num_relays

    def act(self, state: EnvState, rng: np.random.Generator) -> Action:
        return Action.sample(int(np.argmax(np.minimum(state.gains_sr, state.gains_rc))))


def test_margin_holds_after_training_on_mixed_data() -> None:
    """Test the margin audit on a mostly-expert environment dataset."""
    cfg = small_config(hidden_dim=32, batch_size=64, iterations=60, steps_per_iteration=100)
    expert = collect(BestRelayPolicy(cfg.num_relays), NcsEnv(cfg), 2000, seed=0, source="expert")
    random_store = collect(RandomPolicy(cfg.num_relays), NcsEnv(cfg), 2000, seed=1)
    mixed = mix(expert, random_store, 0.95, 2000, seed=2)

    result = train_offline(mixed.records, cfg, "proposed", None, seed=6)
    assert result.audit is not None
    assert result.audit.audited > 0
    assert result.audit.satisfied_fraction >= 0.95
    assert result.audit.passed()


def test_margin_audit_without_unsupported_actions() -> None:
    """Test that an audit with nothing to check does not count as passing."""
    mdp = deterministic_mdp(np.zeros((2, 3)))
    arrays = tabular_arrays(mdp, [(0, 0), (1, 1), (0, 2)], np.ones((2, 3), dtype=bool))
    trainer = OfflineTrainer(2, 3, derive_rng(15, "test.offline"), hidden_dim=4)
    audit = audit_margin(trainer, arrays, len(arrays), derive_rng(16, "test.offline"))
    assert audit.audited == 0
    assert math.isnan(audit.satisfied_fraction)
    assert not audit.passed()


# ---------------------------------------------------------------------------
# Training loop


def test_train_offline_metric_log_and_checkpoints() -> None:
    """Test the iteration log, determinism and the checkpoint series."""
    cfg = small_config()
    dataset = random_dataset(cfg)

    def hook(policy):  # type: ignore[no-untyped-def]
        return evaluate_policy(lambda: NcsEnv(cfg), policy, cfg.eval_realizations, seed=0)

    with tempfile.TemporaryDirectory() as tmp:
        result = train_offline(dataset, cfg, "proposed", hook, seed=3, checkpoint_dir=tmp)
        assert len(result.metrics) == cfg.iterations
        assert [m.iteration for m in result.metrics] == [1, 2, 3]
        assert all(m.avg_reward <= 0.0 for m in result.metrics)
        assert [os.path.basename(p) for p in result.checkpoints] == [
            "proposed_00001.ckpt",
            "proposed_00002.ckpt",
            "proposed_00003.ckpt",
        ]
        assert load_checkpoint(result.checkpoints[-1]).agent_type == "proposed"

    again = train_offline(dataset, cfg, "proposed", hook, seed=3)
    assert again.metrics == result.metrics


def test_train_offline_eval_every() -> None:
    """Test that skipped evaluations are logged as NaN."""
    cfg = small_config(iterations=4)
    dataset = random_dataset(cfg, seed=1)

    def hook(policy):  # type: ignore[no-untyped-def]
        return evaluate_policy(lambda: NcsEnv(cfg), policy, cfg.eval_realizations, seed=0)

    result = train_offline(dataset, cfg, "cql", hook, seed=4, eval_every=4)
    assert result.behavior is None
    assert [math.isnan(m.avg_reward) for m in result.metrics] == [True, True, True, False]


def test_neural_behavior_checkpoint_nets() -> None:
    """Test that neural behavior models travel with the checkpoint."""
    cfg = small_config(behavior_mode="neural", iterations=1)
    dataset = random_dataset(cfg, seed=2)
    result = train_offline(dataset, cfg, "proposed", None, seed=5)
    nets = offline_checkpoint_nets(result.trainer, result.behavior)
    assert len(nets) == 2
    assert nets[1].output_dim == cfg.num_actions


def test_train_offline_rejects_unknown_scheme() -> None:
    """Test scheme validation."""
    cfg = small_config()
    with pytest.raises(ValueError):
        train_offline(random_dataset(cfg, size=10), cfg, "bcq", None, seed=0)
    with pytest.raises(ValueError):
        train_offline([], cfg, "proposed", None, seed=0)
