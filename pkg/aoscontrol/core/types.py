"""Shared domain types and the network input encoding."""

import math
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from ..config import SystemConfig
from .errors import InvalidActionError

NO_ASSOCIATION = -1


def slots_to_seconds(slots: float, cfg: SystemConfig) -> float:
    """Convert a duration in slots to seconds."""
    return slots * cfg.tau_s


@dataclass(frozen=True)
class Action:
    """Idle (``relay is None``) or sample and route via ``relay``.

    Action index 0 is Idle; index ``k + 1`` is Sample(k).
    """

    relay: Optional[int] = None

    @classmethod
    def idle(cls) -> "Action":
        return cls(None)

    @classmethod
    def sample(cls, relay: int) -> "Action":
        return cls(int(relay))

    @classmethod
    def from_index(cls, index: int, num_relays: int) -> "Action":
        """Decode an action index; raises for indices outside the space."""
        index = int(index)
        if not 0 <= index <= num_relays:
            raise InvalidActionError(
                f"action index {index} outside [0, {num_relays}]"
            )
        return cls.idle() if index == 0 else cls.sample(index - 1)

    @property
    def is_idle(self) -> bool:
        return self.relay is None

    @property
    def index(self) -> int:
        return 0 if self.relay is None else self.relay + 1

    def validate(self, num_relays: int) -> None:
        if self.relay is not None and not 0 <= self.relay < num_relays:
            raise InvalidActionError(
                f"relay index {self.relay} outside [0, {num_relays - 1}]"
            )

    def __str__(self) -> str:
        return "idle" if self.relay is None else f"sample({self.relay})"


@dataclass(frozen=True, eq=False)
class EnvState:
    """Controller observation at a decision point.

    ``association`` is the relay of the most recent Sample action or
    ``NO_ASSOCIATION``.
    """

    aos_slots: int
    gains_sr: np.ndarray
    gains_rc: np.ndarray
    association: int = NO_ASSOCIATION

    def validate(self, cfg: SystemConfig) -> None:
        if not 1 <= self.aos_slots <= cfg.aos_cap_slots:
            raise ValueError(f"aos_slots {self.aos_slots} outside [1, {cfg.aos_cap_slots}]")
        for name in ("gains_sr", "gains_rc"):
            gains = getattr(self, name)
            if gains.shape != (cfg.num_relays,):
                raise ValueError(f"{name} must have shape ({cfg.num_relays},)")
            if not (np.all(np.isfinite(gains)) and np.all(gains >= 0)):
                raise ValueError(f"{name} must be finite and non-negative")
        if not (self.association == NO_ASSOCIATION or 0 <= self.association < cfg.num_relays):
            raise ValueError(f"association {self.association} is not a relay index")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EnvState):
            return NotImplemented
        return (
            self.aos_slots == other.aos_slots
            and self.association == other.association
            and np.array_equal(self.gains_sr, other.gains_sr)
            and np.array_equal(self.gains_rc, other.gains_rc)
        )

    def __hash__(self) -> int:
        return hash((self.aos_slots, self.association,
                     self.gains_sr.tobytes(), self.gains_rc.tobytes()))


@dataclass(frozen=True)
class Experience:
    """One transition of the offline dataset."""

    state: EnvState
    action: Action
    reward: float
    next_state: EnvState


class Policy(Protocol):
    """Anything that maps an observation to a valid action."""

    def act(self, state: EnvState, rng: np.random.Generator) -> Action:
        ...


def reference_gain(cfg: SystemConfig) -> float:
    """Gain giving 0 dB single-hop SNR at full transmit power."""
    return cfg.noise_power_w / cfg.tx_power_w


def required_snr(cfg: SystemConfig) -> float:
    """SNR needed to push one sample through hop 1 before its deadline."""
    spectral_efficiency = cfg.sample_bits / (cfg.bandwidth_hz * cfg.hop1_deadline_s)
    return 2.0 ** spectral_efficiency - 1.0


def feature_dim(cfg: SystemConfig) -> int:
    return 1 + 2 * cfg.num_relays + cfg.num_relays + 1


def encode_state(state: EnvState, cfg: SystemConfig) -> np.ndarray:
    """Fixed-length feature vector fed to every network.

    Layout: normalized AoS ``aos / aos_cap``, gains (sensor-relay then
    relay-controller) as ``log1p(g / g_ref) / log1p(snr_req)`` with
    ``g_ref = noise_power / tx_power`` and ``snr_req`` the hop-1 feasibility
    SNR, so a gain at the threshold encodes to 1.0; one-hot association with
    the last slot meaning "none".
    """
    state.validate(cfg)
    g_ref = reference_gain(cfg)
    scale = math.log1p(required_snr(cfg))

    features = np.zeros(feature_dim(cfg), dtype=np.float64)
    features[0] = state.aos_slots / cfg.aos_cap_slots
    relays = cfg.num_relays
    features[1 : 1 + relays] = np.log1p(state.gains_sr / g_ref) / scale
    features[1 + relays : 1 + 2 * relays] = np.log1p(state.gains_rc / g_ref) / scale
    slot = relays if state.association == NO_ASSOCIATION else state.association
    features[1 + 2 * relays + slot] = 1.0
    return features


class StateEncoder:
    """Picklable ``encode_state`` bound to one configuration."""

    def __init__(self, cfg: SystemConfig) -> None:
        self.cfg = cfg

    @property
    def dim(self) -> int:
        return feature_dim(self.cfg)

    def __call__(self, state: EnvState) -> np.ndarray:
        return encode_state(state, self.cfg)
