"""Online policies: uniform random, advantage actor-critic and greedy-from-Q."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy import special

from ..config import SystemConfig
from .env import NcsEnv
from .errors import InvalidActionError, NonFiniteError
from .net import Mlp, OptimizerState, optimizer_step
from .seeding import derive_int, derive_rng
from .types import Action, EnvState, Experience, Policy, StateEncoder

logger = logging.getLogger(__name__)

Encoder = Callable[[EnvState], np.ndarray]
MaskFn = Callable[[EnvState], np.ndarray]

__all__ = [
    "A2cAgent",
    "A2cLosses",
    "A2cPolicy",
    "A2cTrainingLog",
    "GreedyQPolicy",
    "Policy",
    "RandomPolicy",
    "constrained_argmax",
    "entropy",
    "greedy_from_q",
    "log_softmax",
    "random_act",
    "softmax",
    "train_a2c",
]


def log_softmax(logits: np.ndarray) -> np.ndarray:
    return special.log_softmax(logits, axis=-1)


def softmax(logits: np.ndarray) -> np.ndarray:
    return special.softmax(logits, axis=-1)


def entropy(probs: np.ndarray) -> float:
    return float(np.sum(special.entr(probs)))


def _sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    cumulative = np.cumsum(probs)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(index, len(probs) - 1)


def random_act(state: EnvState, rng: np.random.Generator, num_relays: int) -> Action:
    """Uniform over Idle and every Sample(k)."""
    return Action.from_index(int(rng.integers(num_relays + 1)), num_relays)


class RandomPolicy:
    """The Random baseline."""

    def __init__(self, num_relays: int) -> None:
        self.num_relays = num_relays

    def act(self, state: EnvState, rng: np.random.Generator) -> Action:
        return random_act(state, rng, self.num_relays)


@dataclass(frozen=True)
class A2cLosses:
    advantage: float
    critic_loss: float
    actor_loss: float
    entropy: float


class A2cPolicy:
    """Frozen actor snapshot; samples from the softmax unless ``greedy``."""

    def __init__(self, actor: Mlp, encoder: Encoder, num_relays: int, greedy: bool = False) -> None:
        self.actor = actor
        self.encoder = encoder
        self.num_relays = num_relays
        self.greedy = greedy

    def act(self, state: EnvState, rng: np.random.Generator) -> Action:
        logits = self.actor.forward(self.encoder(state))
        if self.greedy:
            index = int(np.argmax(logits))
        else:
            index = _sample_index(softmax(logits), rng)
        return Action.from_index(index, self.num_relays)


class A2cAgent:
    """One-step advantage actor-critic on a continuing task.

    Works on feature vectors; ``act``/``learn`` accept environment states
    through ``encoder``.
    """

    def __init__(
        self,
        input_dim: int,
        num_actions: int,
        rng: np.random.Generator,
        hidden_dim: int = 64,
        gamma: float = 0.95,
        entropy_weight: float = 0.01,
        actor_learning_rate: float = 3.0e-4,
        critic_learning_rate: float = 1.0e-3,
        encoder: Optional[Encoder] = None,
    ) -> None:
        self.num_actions = num_actions
        self.gamma = gamma
        self.entropy_weight = entropy_weight
        self.actor = Mlp.initialize(input_dim, hidden_dim, num_actions, rng)
        self.critic = Mlp.initialize(input_dim, hidden_dim, 1, rng)
        self.actor_opt = OptimizerState.for_net(self.actor, actor_learning_rate)
        self.critic_opt = OptimizerState.for_net(self.critic, critic_learning_rate)
        self.encoder = encoder

    @classmethod
    def from_config(cls, cfg: SystemConfig, rng: np.random.Generator) -> "A2cAgent":
        encoder = StateEncoder(cfg)
        agent = cls(
            encoder.dim,
            cfg.num_actions,
            rng,
            hidden_dim=cfg.hidden_dim,
            gamma=cfg.gamma,
            entropy_weight=cfg.entropy_weight,
            actor_learning_rate=cfg.actor_learning_rate,
            critic_learning_rate=cfg.critic_learning_rate,
            encoder=encoder,
        )
        for opt in (agent.actor_opt, agent.critic_opt):
            opt.beta1, opt.beta2, opt.eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
        return agent

    @property
    def num_relays(self) -> int:
        return self.num_actions - 1

    def _encode(self, state: EnvState) -> np.ndarray:
        if self.encoder is None:
            raise ValueError("agent has no state encoder")
        return self.encoder(state)

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.actor.forward(x))

    def value(self, x: np.ndarray) -> float:
        return float(self.critic.forward(x)[0])

    def advantage(self, x: np.ndarray, reward: float, x_next: np.ndarray) -> float:
        """Bootstrapped one-step advantage; there are no terminal states."""
        return reward + self.gamma * self.value(x_next) - self.value(x)

    def update(self, x: np.ndarray, action: int, reward: float, x_next: np.ndarray) -> A2cLosses:
        """One actor and one critic step on a single transition."""
        advantage = self.advantage(x, reward, x_next)
        logits = self.actor.forward(x)
        log_probs = log_softmax(logits)
        probs = np.exp(log_probs)
        h = float(-np.sum(probs * log_probs))
        critic_loss = advantage ** 2
        actor_loss = -log_probs[action] * advantage - self.entropy_weight * h
        if not (math.isfinite(critic_loss) and math.isfinite(actor_loss)):
            raise NonFiniteError("non-finite A2C loss")

        # d(A^2)/dV(s) with V(s') held fixed
        critic_grads = self.critic.backward(x, np.array([-2.0 * advantage]))
        one_hot = np.zeros(self.num_actions)
        one_hot[action] = 1.0
        # d(-log pi(a))/dz = p - e_a; d(-H)/dz = p * (log p + H)
        grad_logits = advantage * (probs - one_hot) + self.entropy_weight * probs * (log_probs + h)
        actor_grads = self.actor.backward(x, grad_logits)

        optimizer_step(self.critic, critic_grads, self.critic_opt)
        optimizer_step(self.actor, actor_grads, self.actor_opt)
        return A2cLosses(advantage, critic_loss, float(actor_loss), h)

    def learn(self, transition: Experience) -> A2cLosses:
        return self.update(
            self._encode(transition.state),
            transition.action.index,
            transition.reward,
            self._encode(transition.next_state),
        )

    def act(self, state: EnvState, rng: np.random.Generator) -> Action:
        index = _sample_index(self.probabilities(self._encode(state)), rng)
        return Action.from_index(index, self.num_relays)

    def snapshot(self, greedy: bool = False) -> A2cPolicy:
        if self.encoder is None:
            raise ValueError("agent has no state encoder")
        return A2cPolicy(self.actor.copy(), self.encoder, self.num_relays, greedy=greedy)


@dataclass
class A2cTrainingLog:
    steps: int = 0
    window_rewards: List[float] = field(default_factory=list)
    converged: bool = False


def window_converged(window_rewards: List[float], tolerance: float = 0.01) -> bool:
    """Mean reward of the last two windows differs by less than ``tolerance``."""
    if len(window_rewards) < 2:
        return False
    previous, last = window_rewards[-2], window_rewards[-1]
    return abs(last - previous) < tolerance * abs(previous)


def train_a2c(
    env: NcsEnv,
    agent: A2cAgent,
    max_steps: int,
    window_steps: int,
    seed: int,
) -> A2cTrainingLog:
    """Train online until two consecutive reward windows agree within 1%."""
    log = A2cTrainingLog()
    rng = derive_rng(seed, "a2c.policy")
    state = env.reset(derive_int(seed, "a2c.env"))
    window_total = 0.0
    window_count = 0
    while log.steps < max_steps:
        action = agent.act(state, rng)
        result = env.step(action)
        agent.learn(Experience(state, action, result.reward, result.next_state))
        state = result.next_state
        log.steps += 1
        window_total += result.reward
        window_count += 1
        if window_count == window_steps:
            log.window_rewards.append(window_total / window_count)
            logger.info(
                "A2C step %d: window reward %.4f", log.steps, log.window_rewards[-1]
            )
            window_total, window_count = 0.0, 0
            if window_converged(log.window_rewards):
                log.converged = True
                break
    if not log.converged:
        logger.warning("A2C stopped at %d steps without window convergence", log.steps)
    return log


def constrained_argmax(q_row: np.ndarray, mask: Optional[np.ndarray] = None) -> int:
    """Index of the largest allowed Q-value; ties go to the lowest index."""
    q_row = np.asarray(q_row, dtype=np.float64)
    if mask is None:
        return int(np.argmax(q_row))
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("action mask allows no action")
    return int(np.argmax(np.where(mask, q_row, -np.inf)))


class GreedyQPolicy:
    """Greedy over the allowed actions of a frozen Q-network."""

    def __init__(
        self,
        qnet: Mlp,
        encoder: Encoder,
        num_relays: int,
        mask_fn: Optional[MaskFn] = None,
    ) -> None:
        self.qnet = qnet
        self.encoder = encoder
        self.num_relays = num_relays
        self.mask_fn = mask_fn

    def act(self, state: EnvState, rng: np.random.Generator) -> Action:
        q_row = self.qnet.forward(self.encoder(state))
        mask = None if self.mask_fn is None else self.mask_fn(state)
        index = constrained_argmax(q_row, mask)
        if mask is not None and not mask[index]:
            raise InvalidActionError(f"greedy action {index} outside the allowed set")
        return Action.from_index(index, self.num_relays)


def greedy_from_q(
    qnet: Mlp, encoder: Encoder, num_relays: int, mask_fn: Optional[MaskFn] = None
) -> GreedyQPolicy:
    """Policy acting greedily on a snapshot of ``qnet``."""
    return GreedyQPolicy(qnet.copy(), encoder, num_relays, mask_fn)
