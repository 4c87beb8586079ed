"""Slot-level simulator of the relay- and IRS-assisted control loop."""

import csv
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, TextIO

import numpy as np

from ..config import SystemConfig, require_valid
from .process import ProcessChain, step_chain
from .radio import LinkRealization, draw_links, two_hop_outcome
from .seeding import derive_int, derive_rng
from .types import NO_ASSOCIATION, Action, EnvState, Policy, slots_to_seconds

logger = logging.getLogger(__name__)

TRAJECTORY_FIELDS = (
    "t",
    "action",
    "delivered",
    "perfect_inference",
    "aos_slots",
    "energy_j",
    "reward",
)


@dataclass(frozen=True)
class StepInfo:
    """Per-slot diagnostics."""

    delivered: bool
    perfect_inference: bool
    energy_j: float
    aos_seconds: float
    process_state: int
    inferred_state: Optional[int]


@dataclass(frozen=True)
class StepResult:
    next_state: EnvState
    reward: float
    info: StepInfo


@dataclass(frozen=True)
class EvaluationResult:
    """Per-step averages over ``num_realizations`` slots."""

    avg_reward: float
    avg_aos_s: float
    avg_energy_j: float
    num_realizations: int


class NcsEnv:
    """Single-agent MDP of one sensor, ``num_relays`` relays and one IRS.

    Slot pipeline: transmit and infer on the current channels, update AoS,
    advance the process, draw next-slot channels, emit the reward.
    """

    def __init__(self, cfg: SystemConfig, seed: Optional[int] = None) -> None:
        self.cfg = require_valid(cfg)
        self.chain = ProcessChain(cfg.num_process_states, cfg.alpha)
        self.current: EnvState
        self.reset(cfg.rng_seed if seed is None else seed)

    def reset(self, seed: int) -> EnvState:
        """Start a new episode with a fully stale controller."""
        self._channel_rng = derive_rng(seed, "env.channel")
        self._inference_rng = derive_rng(seed, "env.inference")
        self._process_rng = derive_rng(seed, "env.process")

        self.chain.current = int(self._process_rng.integers(self.cfg.num_process_states))
        links = draw_links(self.cfg, self._channel_rng)
        self.current = EnvState(
            aos_slots=self.cfg.aos_cap_slots,
            gains_sr=links.gains_sr,
            gains_rc=links.gains_rc,
            association=NO_ASSOCIATION,
        )
        return self.current

    def reward(self, aos_slots: int, energy_j: float) -> float:
        cfg = self.cfg
        return -(cfg.reward_weight_aos * slots_to_seconds(aos_slots, cfg)
                 + cfg.reward_weight_energy * energy_j)

    def step(self, action: Action) -> StepResult:
        """Advance one slot under ``action``."""
        cfg = self.cfg
        action.validate(cfg.num_relays)
        state = self.current
        true_state = self.chain.current

        delivered = False
        perfect_inference = False
        inferred_state: Optional[int] = None
        energy = 0.0
        association = state.association

        if not action.is_idle:
            relay = int(action.relay)  # type: ignore[arg-type]
            links = LinkRealization(state.gains_sr, state.gains_rc)
            outcome = two_hop_outcome(links, relay, cfg)
            energy = outcome.sensor_energy_j
            delivered = outcome.delivered
            association = relay
            if delivered:
                accurate = self._inference_rng.random() < cfg.beta
                if accurate:
                    inferred_state = true_state
                else:
                    other = int(self._inference_rng.integers(cfg.num_process_states - 1))
                    inferred_state = other + 1 if other >= true_state else other
                perfect_inference = accurate

        if perfect_inference:
            aos = 1
        else:
            aos = min(state.aos_slots + 1, cfg.aos_cap_slots)

        step_chain(self.chain, self._process_rng)
        links = draw_links(cfg, self._channel_rng)
        self.current = EnvState(
            aos_slots=aos,
            gains_sr=links.gains_sr,
            gains_rc=links.gains_rc,
            association=association,
        )

        info = StepInfo(
            delivered=delivered,
            perfect_inference=perfect_inference,
            energy_j=energy,
            aos_seconds=slots_to_seconds(aos, cfg),
            process_state=true_state,
            inferred_state=inferred_state,
        )
        return StepResult(self.current, self.reward(aos, energy), info)


def evaluate_policy(
    env_factory: Callable[[], NcsEnv],
    policy: Policy,
    num_realizations: int,
    seed: int,
    episode_length: Optional[int] = None,
    trajectory: Optional[TextIO] = None,
) -> EvaluationResult:
    """Average reward, AoS and energy of ``policy`` over ``num_realizations`` slots.

    Slots are split into episodes of ``episode_length`` (config default); each
    episode resets the environment and the policy stream from derived seeds.
    """
    if num_realizations < 1:
        raise ValueError("num_realizations must be >= 1")
    env = env_factory()
    length = episode_length or env.cfg.episode_length
    writer = None
    if trajectory is not None:
        writer = csv.writer(trajectory, lineterminator="\n")
        writer.writerow(TRAJECTORY_FIELDS)

    total_reward = 0.0
    total_aos = 0.0
    total_energy = 0.0
    steps = 0
    episode = 0
    while steps < num_realizations:
        state = env.reset(derive_int(seed, "eval.episode", episode))
        rng = derive_rng(seed, "eval.policy", episode)
        for _ in range(min(length, num_realizations - steps)):
            action = policy.act(state, rng)
            result = env.step(action)
            total_reward += result.reward
            total_aos += result.info.aos_seconds
            total_energy += result.info.energy_j
            if writer is not None:
                writer.writerow((
                    steps,
                    action.index,
                    int(result.info.delivered),
                    int(result.info.perfect_inference),
                    result.next_state.aos_slots,
                    repr(result.info.energy_j),
                    repr(result.reward),
                ))
            state = result.next_state
            steps += 1
        episode += 1

    evaluation = EvaluationResult(
        avg_reward=total_reward / steps,
        avg_aos_s=total_aos / steps,
        avg_energy_j=total_energy / steps,
        num_realizations=steps,
    )
    if not math.isfinite(evaluation.avg_reward):
        logger.warning("non-finite average reward over %d realizations", steps)
    logger.debug("evaluated %d realizations over %d episodes", steps, episode)
    return evaluation
