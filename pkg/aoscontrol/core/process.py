"""Finite-state Markov chain of the physical process."""

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class ProcessChain:
    """Symmetric chain: stay with probability ``alpha``, otherwise jump
    uniformly to one of the other states."""

    num_states: int
    alpha: float
    current: int = 0

    def __post_init__(self) -> None:
        if self.num_states < 2:
            raise ValueError("num_states must be >= 2")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha out of range")
        if not 0 <= self.current < self.num_states:
            raise ValueError(f"current state {self.current} outside [0, {self.num_states})")

    @property
    def switch_probability(self) -> float:
        """Probability of moving to one specific other state."""
        return (1.0 - self.alpha) / (self.num_states - 1)

    def transition_row(self, state: int) -> np.ndarray:
        row = np.full(self.num_states, self.switch_probability)
        row[state] = self.alpha
        return row

    def transition_matrix(self) -> np.ndarray:
        return np.stack([self.transition_row(s) for s in range(self.num_states)])


def _next_state(current: int, num_states: int, alpha: float, u: float, jump: int) -> int:
    if u < alpha:
        return current
    # jump is uniform over the num_states - 1 other states
    return jump + 1 if jump >= current else jump


def step_chain(chain: ProcessChain, rng: np.random.Generator) -> int:
    """Advance ``chain`` by one slot and return the new state index."""
    u = rng.random()
    jump = int(rng.integers(chain.num_states - 1))
    chain.current = _next_state(chain.current, chain.num_states, chain.alpha, u, jump)
    return chain.current


def sample_path(chain: ProcessChain, num_steps: int, rng: np.random.Generator) -> np.ndarray:
    """Advance ``chain`` ``num_steps`` times; returns the visited states.

    Same transition rule as :func:`step_chain`, with the draws taken in bulk.
    """
    uniforms = rng.random(num_steps)
    jumps = rng.integers(chain.num_states - 1, size=num_steps)
    path = np.empty(num_steps, dtype=np.int64)
    current = chain.current
    for t in range(num_steps):
        current = _next_state(current, chain.num_states, chain.alpha, uniforms[t], int(jumps[t]))
        path[t] = current
    chain.current = current
    return path


def stationary_distribution(num_states: int, alpha: float) -> Optional[np.ndarray]:
    """Long-run state distribution.

    The chain is doubly stochastic, so for ``alpha < 1`` it is uniform. With
    ``alpha == 1`` every distribution is stationary and ``None`` is returned.
    """
    if alpha >= 1.0:
        return None
    return np.full(num_states, 1.0 / num_states)
