"""Offline Q-learning from a static dataset.

The proposed scheme restricts Bellman backups and greedy extraction to the
actions the dataset supports and adds a hinge penalty that keeps every
unsupported action at least ``margin`` below the best supported one. CQL is
the conservative baseline. Tabular value iteration and policy evaluation
serve as exact oracles.
"""

import logging
import math
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from ..config import SystemConfig
from .agents import GreedyQPolicy, log_softmax, softmax
from .env import EvaluationResult
from .errors import NonFiniteError
from .net import Mlp, OptimizerState, optimizer_step, save_checkpoint
from .seeding import derive_rng
from .types import NO_ASSOCIATION, EnvState, Experience, Policy, StateEncoder

logger = logging.getLogger(__name__)

SCHEMES = ("proposed", "cql")
MARGIN_AUDIT_FRACTION = 0.95
MARGIN_AUDIT_SAMPLES = 2000

EvalHook = Callable[[Policy], EvaluationResult]


# ---------------------------------------------------------------------------
# Tabular oracles


@dataclass(frozen=True)
class TabularMdp:
    """``transitions[s, a, s']`` probabilities and ``rewards[s, a]``."""

    transitions: np.ndarray
    rewards: np.ndarray

    @property
    def num_states(self) -> int:
        return int(self.rewards.shape[0])

    @property
    def num_actions(self) -> int:
        return int(self.rewards.shape[1])


@dataclass(frozen=True)
class ValueIterationResult:
    q: np.ndarray
    policy: np.ndarray
    iterations: int


def value_iteration(
    mdp: TabularMdp, gamma: float, tolerance: float = 1e-10, max_iterations: int = 1_000_000
) -> ValueIterationResult:
    """Optimal action values by Bellman optimality iteration."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    q = np.zeros_like(mdp.rewards, dtype=np.float64)
    for iteration in range(1, max_iterations + 1):
        updated = mdp.rewards + gamma * mdp.transitions @ q.max(axis=1)
        delta = float(np.max(np.abs(updated - q)))
        q = updated
        if delta < tolerance:
            break
    return ValueIterationResult(q=q, policy=np.argmax(q, axis=1), iterations=iteration)


def policy_evaluation(mdp: TabularMdp, policy: np.ndarray, gamma: float) -> np.ndarray:
    """Exact state values of a stochastic ``policy[s, a]`` (or deterministic
    ``policy[s]``) by solving the linear Bellman system."""
    policy = np.asarray(policy)
    if policy.ndim == 1:
        probs = np.zeros((mdp.num_states, mdp.num_actions))
        probs[np.arange(mdp.num_states), policy.astype(int)] = 1.0
    else:
        probs = policy.astype(np.float64)
    reward = np.sum(probs * mdp.rewards, axis=1)
    transition = np.einsum("sa,sat->st", probs, mdp.transitions)
    return np.linalg.solve(np.eye(mdp.num_states) - gamma * transition, reward)


# ---------------------------------------------------------------------------
# Behavior (empirical) policy


def support_from_probabilities(probs: np.ndarray, threshold: float) -> np.ndarray:
    """Actions whose probability is at least ``threshold`` times the row max."""
    probs = np.atleast_2d(probs)
    return probs >= threshold * probs.max(axis=1, keepdims=True)


class StateKeyer:
    """Discretizes a state into (AoS level, association slot, gain tercile).

    The gain tercile buckets the best relay's bottleneck gain
    ``max_k min(g_sr[k], g_rc[k])`` against dataset tertiles.
    """

    AOS_LEVELS = 10

    def __init__(self, cfg: SystemConfig, lower: float, upper: float) -> None:
        self.cfg = cfg
        self.lower = lower
        self.upper = upper

    @staticmethod
    def bottleneck_gain(state: EnvState) -> float:
        return float(np.max(np.minimum(state.gains_sr, state.gains_rc)))

    @classmethod
    def fit(cls, states: Sequence[EnvState], cfg: SystemConfig) -> "StateKeyer":
        gains = np.array([cls.bottleneck_gain(s) for s in states])
        lower, upper = np.quantile(gains, [1.0 / 3.0, 2.0 / 3.0])
        return cls(cfg, float(lower), float(upper))

    def __call__(self, state: EnvState) -> Tuple[int, int, int]:
        level = min(self.AOS_LEVELS - 1, (state.aos_slots - 1) * self.AOS_LEVELS // self.cfg.aos_cap_slots)
        slot = self.cfg.num_relays if state.association == NO_ASSOCIATION else state.association
        gain = self.bottleneck_gain(state)
        bucket = 0 if gain < self.lower else (1 if gain < self.upper else 2)
        return (level, slot, bucket)


class BehaviorModel(ABC):
    """Estimate of the action distribution that produced the dataset."""

    def __init__(self, num_actions: int, support_threshold: float) -> None:
        self.num_actions = num_actions
        self.support_threshold = support_threshold

    @abstractmethod
    def probabilities(self, states: Sequence[EnvState]) -> np.ndarray:
        """``(len(states), num_actions)`` action probabilities."""

    def support(self, states: Sequence[EnvState]) -> np.ndarray:
        return support_from_probabilities(self.probabilities(states), self.support_threshold)

    def support_mask(self, state: EnvState) -> np.ndarray:
        return self.support([state])[0]


class TabularBehaviorModel(BehaviorModel):
    """Exact action frequencies per discrete state key.

    Keys never seen in the dataset fall back to the dataset-wide frequency.
    """

    def __init__(
        self,
        table: Dict[Hashable, np.ndarray],
        fallback: np.ndarray,
        num_actions: int,
        support_threshold: float,
        keyer: Optional[Callable[[EnvState], Hashable]] = None,
    ) -> None:
        super().__init__(num_actions, support_threshold)
        self.table = table
        self.fallback = fallback
        self.keyer = keyer

    @classmethod
    def from_keys(
        cls,
        keys: Sequence[Hashable],
        actions: Sequence[int],
        num_actions: int,
        support_threshold: float,
        keyer: Optional[Callable[[EnvState], Hashable]] = None,
    ) -> "TabularBehaviorModel":
        if len(keys) == 0:
            raise ValueError("cannot fit a behavior model to an empty dataset")
        counts: Dict[Hashable, np.ndarray] = {}
        for key, action in zip(keys, actions):
            if key not in counts:
                counts[key] = np.zeros(num_actions)
            counts[key][int(action)] += 1.0
        table = {key: row / row.sum() for key, row in counts.items()}
        overall = np.bincount(np.asarray(actions, dtype=int), minlength=num_actions).astype(float)
        return cls(table, overall / overall.sum(), num_actions, support_threshold, keyer)

    def probabilities_for_keys(self, keys: Sequence[Hashable]) -> np.ndarray:
        return np.array([self.table.get(key, self.fallback) for key in keys])

    def support_for_keys(self, keys: Sequence[Hashable]) -> np.ndarray:
        return support_from_probabilities(self.probabilities_for_keys(keys), self.support_threshold)

    def probabilities(self, states: Sequence[EnvState]) -> np.ndarray:
        if self.keyer is None:
            raise ValueError("tabular behavior model has no state keyer")
        return self.probabilities_for_keys([self.keyer(s) for s in states])


def _cross_entropy(net: Mlp, x: np.ndarray, labels: np.ndarray) -> float:
    log_probs = log_softmax(net.forward(x))
    return float(-np.mean(log_probs[np.arange(len(labels)), labels]))


class NeuralBehaviorModel(BehaviorModel):
    """Softmax classifier cloned from the dataset actions."""

    def __init__(
        self, net: Mlp, encoder: Callable[[EnvState], np.ndarray], support_threshold: float
    ) -> None:
        super().__init__(net.output_dim, support_threshold)
        self.net = net
        self.encoder = encoder

    @staticmethod
    def fit_classifier(
        features: np.ndarray,
        actions: np.ndarray,
        num_actions: int,
        rng: np.random.Generator,
        hidden_dim: int = 64,
        learning_rate: float = 1.0e-3,
        batch_size: int = 256,
        max_epochs: int = 200,
        patience: int = 3,
        min_improvement: float = 1.0e-4,
    ) -> Mlp:
        """Cross-entropy cloning with a 10% validation split; stops once the
        validation loss has not improved for ``patience`` epochs."""
        actions = np.asarray(actions, dtype=int)
        order = rng.permutation(len(actions))
        split = max(1, len(order) // 10) if len(order) > 1 else 0
        valid_idx, train_idx = order[:split], order[split:]
        if len(valid_idx) == 0:
            valid_idx = train_idx

        net = Mlp.initialize(features.shape[1], hidden_dim, num_actions, rng)
        best_net = net.copy()
        opt = OptimizerState.for_net(net, learning_rate)
        best = _cross_entropy(net, features[valid_idx], actions[valid_idx])
        stale = 0
        for epoch in range(max_epochs):
            shuffled = rng.permutation(train_idx)
            for start in range(0, len(shuffled), batch_size):
                idx = shuffled[start : start + batch_size]
                x = features[idx]
                grad = softmax(net.forward(x))
                grad[np.arange(len(idx)), actions[idx]] -= 1.0
                optimizer_step(net, net.backward(x, grad / len(idx)), opt)
            loss = _cross_entropy(net, features[valid_idx], actions[valid_idx])
            if loss < best - min_improvement:
                best, stale = loss, 0
                best_net = net.copy()
            else:
                stale += 1
                if stale >= patience:
                    logger.debug("behavior cloning plateaued after %d epochs", epoch + 1)
                    break
        return best_net

    def probabilities_features(self, features: np.ndarray) -> np.ndarray:
        return np.atleast_2d(softmax(self.net.forward(features)))

    def probabilities(self, states: Sequence[EnvState]) -> np.ndarray:
        return self.probabilities_features(np.array([self.encoder(s) for s in states]))


def fit_behavior(
    dataset: Sequence[Experience],
    cfg: SystemConfig,
    mode: str,
    support_threshold: float,
    rng: Optional[np.random.Generator] = None,
) -> BehaviorModel:
    """Empirical policy of ``dataset`` by exact counting or by cloning."""
    if len(dataset) == 0:
        raise ValueError("cannot fit a behavior model to an empty dataset")
    states = [e.state for e in dataset]
    actions = np.array([e.action.index for e in dataset])
    if mode == "tabular":
        keyer = StateKeyer.fit(states, cfg)
        return TabularBehaviorModel.from_keys(
            [keyer(s) for s in states], actions, cfg.num_actions, support_threshold, keyer
        )
    if mode == "neural":
        encoder = StateEncoder(cfg)
        features = np.array([encoder(s) for s in states])
        net = NeuralBehaviorModel.fit_classifier(
            features,
            actions,
            cfg.num_actions,
            rng if rng is not None else derive_rng(cfg.rng_seed, "offline.behavior"),
            hidden_dim=cfg.hidden_dim,
        )
        return NeuralBehaviorModel(net, encoder, support_threshold)
    raise ValueError(f"unknown behavior mode '{mode}'")


# ---------------------------------------------------------------------------
# Training data


@dataclass(frozen=True)
class TransitionArrays:
    """Dense dataset view with precomputed support masks."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    support: np.ndarray
    next_support: np.ndarray

    def __len__(self) -> int:
        return int(self.actions.shape[0])

    @classmethod
    def from_experiences(
        cls,
        dataset: Sequence[Experience],
        encoder: Callable[[EnvState], np.ndarray],
        num_actions: int,
        behavior: Optional[BehaviorModel] = None,
    ) -> "TransitionArrays":
        states = [e.state for e in dataset]
        next_states = [e.next_state for e in dataset]
        if behavior is None:
            support = np.ones((len(dataset), num_actions), dtype=bool)
            next_support = support.copy()
        else:
            support = behavior.support(states)
            next_support = behavior.support(next_states)
        return cls(
            states=np.array([encoder(s) for s in states]),
            actions=np.array([e.action.index for e in dataset], dtype=np.int64),
            rewards=np.array([e.reward for e in dataset], dtype=np.float64),
            next_states=np.array([encoder(s) for s in next_states]),
            support=support,
            next_support=next_support,
        )

    def subset(self, index: np.ndarray) -> "TransitionArrays":
        return TransitionArrays(
            self.states[index],
            self.actions[index],
            self.rewards[index],
            self.next_states[index],
            self.support[index],
            self.next_support[index],
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> "TransitionArrays":
        return self.subset(rng.integers(len(self), size=batch_size))


# ---------------------------------------------------------------------------
# Trainer


@dataclass(frozen=True)
class UpdateLosses:
    td_loss: float
    penalty_loss: float
    total_loss: float


class OfflineTrainer:
    """Q-network, target network and optimizer for one offline scheme."""

    def __init__(
        self,
        input_dim: int,
        num_actions: int,
        rng: np.random.Generator,
        scheme: str = "proposed",
        hidden_dim: int = 64,
        gamma: float = 0.95,
        penalty_weight: float = 1.0,
        margin: float = 1.0,
        cql_alpha: float = 1.0,
        target_sync_steps: int = 200,
        batch_size: int = 256,
        learning_rate: float = 3.0e-4,
    ) -> None:
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme '{scheme}'")
        if penalty_weight < 0 or margin < 0:
            raise ValueError("penalty_weight and margin must be >= 0")
        self.scheme = scheme
        self.num_actions = num_actions
        self.gamma = gamma
        self.penalty_weight = penalty_weight
        self.margin = margin
        self.cql_alpha = cql_alpha
        self.target_sync_steps = target_sync_steps
        self.batch_size = batch_size
        self.qnet = Mlp.initialize(input_dim, hidden_dim, num_actions, rng)
        self.target = self.qnet.copy()
        self.opt = OptimizerState.for_net(self.qnet, learning_rate)
        self.updates = 0

    @classmethod
    def from_config(cls, cfg: SystemConfig, scheme: str, rng: np.random.Generator) -> "OfflineTrainer":
        trainer = cls(
            StateEncoder(cfg).dim,
            cfg.num_actions,
            rng,
            scheme=scheme,
            hidden_dim=cfg.hidden_dim,
            gamma=cfg.gamma,
            penalty_weight=cfg.penalty_weight,
            margin=cfg.margin,
            cql_alpha=cfg.cql_alpha,
            target_sync_steps=cfg.target_sync_steps,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
        )
        trainer.opt.beta1, trainer.opt.beta2, trainer.opt.eps = (
            cfg.adam_beta1,
            cfg.adam_beta2,
            cfg.adam_eps,
        )
        return trainer

    def td_terms(self, batch: TransitionArrays, constrained: bool) -> Tuple[np.ndarray, float, np.ndarray]:
        """Q-values, TD loss and its gradient with respect to the Q-values.

        With ``constrained`` the backup maximizes over the supported next
        actions only.
        """
        n = len(batch)
        rows = np.arange(n)
        q = self.qnet.forward(batch.states)
        next_q = self.target.forward(batch.next_states)
        if constrained:
            next_q = np.where(batch.next_support, next_q, -np.inf)
        targets = batch.rewards + self.gamma * next_q.max(axis=1)
        errors = q[rows, batch.actions] - targets
        grad = np.zeros_like(q)
        grad[rows, batch.actions] = 2.0 * errors / n
        return q, float(np.mean(errors ** 2)), grad

    def td_loss(self, batch: TransitionArrays, constrained: bool = True) -> float:
        return self.td_terms(batch, constrained)[1]

    def margin_penalty(self, q: np.ndarray, support: np.ndarray) -> Tuple[float, np.ndarray]:
        """Hinge penalty keeping unsupported actions ``margin`` below the best
        supported action, and its gradient."""
        n = q.shape[0]
        rows = np.arange(n)
        best_index = np.argmax(np.where(support, q, -np.inf), axis=1)
        best = q[rows, best_index]
        hinge = np.where(support, 0.0, np.maximum(0.0, q + self.margin - best[:, None]))
        active = hinge > 0.0
        grad = active / n
        grad[rows, best_index] -= active.sum(axis=1) / n
        return float(hinge.sum(axis=1).mean()), grad

    def _apply(self, batch: TransitionArrays, grad_q: np.ndarray, losses: UpdateLosses) -> UpdateLosses:
        if not math.isfinite(losses.total_loss):
            raise NonFiniteError(f"non-finite {self.scheme} loss")
        optimizer_step(self.qnet, self.qnet.backward(batch.states, grad_q), self.opt)
        self.updates += 1
        if self.updates % self.target_sync_steps == 0:
            self.target.load_from(self.qnet)
        return losses

    def offline_update(self, batch: TransitionArrays) -> UpdateLosses:
        """Support-constrained TD plus the weighted margin penalty."""
        q, td, grad = self.td_terms(batch, constrained=True)
        penalty, penalty_grad = self.margin_penalty(q, batch.support)
        total = td + self.penalty_weight * penalty
        grad = grad + self.penalty_weight * penalty_grad
        return self._apply(batch, grad, UpdateLosses(td, penalty, total))

    def cql_update(self, batch: TransitionArrays) -> UpdateLosses:
        """Unconstrained TD plus the log-sum-exp conservatism term."""
        q, td, grad = self.td_terms(batch, constrained=False)
        n = len(batch)
        rows = np.arange(n)
        conservative = float(np.mean(special.logsumexp(q, axis=1) - q[rows, batch.actions]))
        cql_grad = softmax(q)
        cql_grad[rows, batch.actions] -= 1.0
        total = td + self.cql_alpha * conservative
        grad = grad + self.cql_alpha * cql_grad / n
        return self._apply(batch, grad, UpdateLosses(td, conservative, total))

    def update(self, batch: TransitionArrays) -> UpdateLosses:
        if self.scheme == "proposed":
            return self.offline_update(batch)
        return self.cql_update(batch)

    def q_values(self, features: np.ndarray) -> np.ndarray:
        return self.qnet.forward(features)

    def policy(
        self,
        encoder: Callable[[EnvState], np.ndarray],
        num_relays: int,
        behavior: Optional[BehaviorModel] = None,
    ) -> GreedyQPolicy:
        """Greedy snapshot; restricted to the behavior support when given."""
        mask_fn = behavior.support_mask if behavior is not None else None
        return GreedyQPolicy(self.qnet.copy(), encoder, num_relays, mask_fn)


@dataclass(frozen=True)
class MarginAudit:
    """``satisfied_fraction`` is NaN when no sampled state had an unsupported action."""

    satisfied_fraction: float
    audited: int

    def passed(self, required: float = MARGIN_AUDIT_FRACTION) -> bool:
        return self.audited > 0 and self.satisfied_fraction >= required


def audit_margin(
    trainer: OfflineTrainer,
    arrays: TransitionArrays,
    sample_size: int,
    rng: np.random.Generator,
    slack: float = 0.5,
) -> MarginAudit:
    """Fraction of sampled dataset states whose best supported Q-value beats
    every unsupported one by ``slack * margin``.

    States whose support covers every action are skipped.
    """
    index = rng.choice(len(arrays), size=min(sample_size, len(arrays)), replace=False)
    subset = arrays.subset(index)
    has_ood = ~subset.support.all(axis=1)
    if not has_ood.any():
        return MarginAudit(math.nan, 0)
    q = trainer.q_values(subset.states[has_ood])
    support = subset.support[has_ood]
    best_in = np.where(support, q, -np.inf).max(axis=1)
    best_out = np.where(support, -np.inf, q).max(axis=1)
    satisfied = best_in >= best_out + slack * trainer.margin
    return MarginAudit(float(satisfied.mean()), int(has_ood.sum()))


# ---------------------------------------------------------------------------
# Training loop


@dataclass(frozen=True)
class IterationMetrics:
    iteration: int
    avg_reward: float
    avg_aos_s: float
    avg_energy_j: float
    td_loss: float
    penalty_loss: float


@dataclass
class OfflineTrainingResult:
    trainer: OfflineTrainer
    behavior: Optional[BehaviorModel]
    arrays: TransitionArrays
    metrics: List[IterationMetrics] = field(default_factory=list)
    checkpoints: List[str] = field(default_factory=list)
    audit: Optional[MarginAudit] = None


def run_iterations(
    trainer: OfflineTrainer,
    arrays: TransitionArrays,
    iterations: int,
    steps_per_iteration: int,
    rng: np.random.Generator,
    policy_factory: Optional[Callable[[], Policy]] = None,
    eval_hook: Optional[EvalHook] = None,
    eval_every: int = 1,
    on_iteration: Optional[Callable[[int], None]] = None,
) -> List[IterationMetrics]:
    """Train for ``iterations`` x ``steps_per_iteration`` updates.

    After every ``eval_every``-th iteration (and the last one) the current
    greedy policy is evaluated; other rows carry NaN evaluation metrics.
    """
    metrics: List[IterationMetrics] = []
    for iteration in range(1, iterations + 1):
        td_total = 0.0
        penalty_total = 0.0
        for _ in range(steps_per_iteration):
            losses = trainer.update(arrays.sample(trainer.batch_size, rng))
            td_total += losses.td_loss
            penalty_total += losses.penalty_loss

        evaluation = None
        if eval_hook is not None and policy_factory is not None:
            if iteration % eval_every == 0 or iteration == iterations:
                evaluation = eval_hook(policy_factory())
        metrics.append(
            IterationMetrics(
                iteration=iteration,
                avg_reward=evaluation.avg_reward if evaluation else math.nan,
                avg_aos_s=evaluation.avg_aos_s if evaluation else math.nan,
                avg_energy_j=evaluation.avg_energy_j if evaluation else math.nan,
                td_loss=td_total / steps_per_iteration,
                penalty_loss=penalty_total / steps_per_iteration,
            )
        )
        if evaluation is not None:
            logger.info(
                "%s iteration %d: reward %.4f, AoS %.4f s, energy %.4f J",
                trainer.scheme,
                iteration,
                evaluation.avg_reward,
                evaluation.avg_aos_s,
                evaluation.avg_energy_j,
            )
        if on_iteration is not None:
            on_iteration(iteration)
    return metrics


def train_offline(
    dataset: Sequence[Experience],
    cfg: SystemConfig,
    scheme: str,
    eval_hook: Optional[EvalHook],
    seed: int,
    eval_every: int = 1,
    checkpoint_dir: Optional[str] = None,
) -> OfflineTrainingResult:
    """Fit the behavior model (proposed scheme only) and train ``scheme``."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme '{scheme}'")
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    encoder = StateEncoder(cfg)
    behavior: Optional[BehaviorModel] = None
    if scheme == "proposed":
        behavior = fit_behavior(
            dataset, cfg, cfg.behavior_mode, cfg.support_threshold, derive_rng(seed, "offline.behavior")
        )
    arrays = TransitionArrays.from_experiences(dataset, encoder, cfg.num_actions, behavior)
    trainer = OfflineTrainer.from_config(cfg, scheme, derive_rng(seed, "offline.init"))
    result = OfflineTrainingResult(trainer=trainer, behavior=behavior, arrays=arrays)

    def policy_factory() -> Policy:
        return trainer.policy(encoder, cfg.num_relays, behavior)

    def checkpoint(iteration: int) -> None:
        if checkpoint_dir is None:
            return
        if iteration % cfg.checkpoint_every and iteration != cfg.iterations:
            return
        os.makedirs(checkpoint_dir, exist_ok=True)
        path = os.path.join(checkpoint_dir, f"{scheme}_{iteration:05d}.ckpt")
        save_checkpoint(path, offline_checkpoint_nets(trainer, behavior), agent_type=scheme)
        result.checkpoints.append(path)

    result.metrics = run_iterations(
        trainer,
        arrays,
        cfg.iterations,
        cfg.steps_per_iteration,
        derive_rng(seed, "offline.batch"),
        policy_factory=policy_factory,
        eval_hook=eval_hook,
        eval_every=eval_every,
        on_iteration=checkpoint,
    )
    if scheme == "proposed":
        result.audit = audit_margin(trainer, arrays, MARGIN_AUDIT_SAMPLES, derive_rng(seed, "offline.audit"))
        if result.audit.audited == 0:
            logger.info("margin audit skipped: every sampled state supports every action")
        elif not result.audit.passed():
            logger.warning(
                "margin held in %.1f%% of %d audited states",
                100.0 * result.audit.satisfied_fraction,
                result.audit.audited,
            )
    return result


def offline_checkpoint_nets(trainer: OfflineTrainer, behavior: Optional[BehaviorModel]) -> List[Mlp]:
    """Q-network, followed by the cloned behavior network when there is one."""
    nets = [trainer.qnet]
    if isinstance(behavior, NeuralBehaviorModel):
        nets.append(behavior.net)
    return nets
