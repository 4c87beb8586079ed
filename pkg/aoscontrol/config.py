"""Configuration management for AoSControl.

A configuration is a flat ``key = value`` text file. Every field of
:class:`SystemConfig` is a key; lines starting with ``#`` are comments.
"""

import hashlib
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .core.errors import ConfigError

CONFIG_DIR = os.path.expanduser("~/.config/aoscontrol")
DEFAULT_CONFIG_FILE = os.path.join(CONFIG_DIR, "config.conf")

FADING_MODELS = ("rayleigh", "rician")
BEHAVIOR_MODES = ("tabular", "neural")


@dataclass(frozen=True)
class SystemConfig:
    """Physical system, reward, learning and experiment settings."""

    # Process and semantics
    num_process_states: int = 9
    alpha: float = 0.5
    beta: float = 0.5
    tau_s: float = 0.1

    # Radio
    num_relays: int = 5
    num_irs_elements: int = 75
    bandwidth_hz: float = 1.0e7
    tx_power_w: float = 1.0
    sample_bits: float = 6.2e6
    noise_power_w: float = 4.0e-14
    rayleigh_scale_direct: float = 1.0
    rayleigh_scale_irs: float = 1.0
    path_loss_sr: float = 6.7e-13
    path_loss_rc: float = 6.7e-13
    hop1_fraction: float = 0.5
    fading: str = "rayleigh"
    rician_k_factor: float = 3.0

    # Sensor energy
    sampling_energy_j: float = 0.01
    extraction_energy_j: float = 0.05

    # Reward
    aos_cap_slots: int = 50
    reward_weight_aos: float = 1.0
    reward_weight_energy: float = 1.0
    gamma: float = 0.95

    # Function approximators
    hidden_dim: int = 64
    learning_rate: float = 3.0e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1.0e-8

    # Online baseline
    actor_learning_rate: float = 3.0e-4
    critic_learning_rate: float = 1.0e-3
    entropy_weight: float = 0.01
    a2c_window_steps: int = 20000
    a2c_max_steps: int = 300000

    # Offline learning
    behavior_mode: str = "neural"
    support_threshold: float = 0.1
    penalty_weight: float = 1.0
    margin: float = 1.0
    cql_alpha: float = 1.0
    target_sync_steps: int = 200
    batch_size: int = 256
    steps_per_iteration: int = 100
    iterations: int = 800
    checkpoint_every: int = 100

    # Evaluation and data
    eval_realizations: int = 10000
    episode_length: int = 1000
    dataset_size: int = 100000

    rng_seed: int = 0

    @property
    def num_actions(self) -> int:
        """Idle plus one sample-and-route action per relay."""
        return self.num_relays + 1

    @property
    def hop1_deadline_s(self) -> float:
        return self.hop1_fraction * self.tau_s

    @property
    def hop2_deadline_s(self) -> float:
        return (1.0 - self.hop1_fraction) * self.tau_s


# Fields that change the simulated physics. Seeds and learner settings are
# excluded so one dataset can serve many learner configurations.
PHYSICS_FIELDS: Tuple[str, ...] = (
    "num_process_states",
    "alpha",
    "beta",
    "tau_s",
    "num_relays",
    "num_irs_elements",
    "bandwidth_hz",
    "tx_power_w",
    "sample_bits",
    "noise_power_w",
    "rayleigh_scale_direct",
    "rayleigh_scale_irs",
    "path_loss_sr",
    "path_loss_rc",
    "hop1_fraction",
    "fading",
    "rician_k_factor",
    "sampling_energy_j",
    "extraction_energy_j",
    "aos_cap_slots",
    "reward_weight_aos",
    "reward_weight_energy",
    "gamma",
)

_FIELD_TYPES: Dict[str, type] = {
    f.name: type(f.default) for f in fields(SystemConfig)
}


def _in_unit_interval(value: float) -> bool:
    return 0.0 <= value <= 1.0


def validate_config(cfg: SystemConfig) -> List[str]:
    """Return every violated invariant of ``cfg``; empty means valid."""
    errors: List[str] = []

    if not _in_unit_interval(cfg.alpha):
        errors.append("alpha out of range")
    if not _in_unit_interval(cfg.beta):
        errors.append("beta out of range")
    if cfg.gamma >= 1.0:
        errors.append("gamma must be < 1")
    elif cfg.gamma < 0.0:
        errors.append("gamma must be >= 0")
    if cfg.tau_s <= 0:
        errors.append("tau_s must be > 0")

    for name in (
        "bandwidth_hz",
        "tx_power_w",
        "sample_bits",
        "noise_power_w",
        "sampling_energy_j",
        "extraction_energy_j",
    ):
        value = getattr(cfg, name)
        if not (value > 0 and math.isfinite(value)):
            errors.append(f"{name} must be > 0")

    for name in ("rayleigh_scale_direct", "rayleigh_scale_irs", "path_loss_sr", "path_loss_rc"):
        if getattr(cfg, name) < 0:
            errors.append(f"{name} must be >= 0")

    if cfg.num_process_states < 2:
        errors.append("num_process_states must be >= 2")
    if cfg.num_relays < 1:
        errors.append("num_relays must be >= 1")
    if cfg.num_irs_elements < 0:
        errors.append("num_irs_elements must be >= 0")
    if cfg.aos_cap_slots < 1:
        errors.append("aos_cap_slots must be >= 1")
    if not 0.0 < cfg.hop1_fraction < 1.0:
        errors.append("hop1_fraction must lie in (0, 1)")
    if cfg.fading not in FADING_MODELS:
        errors.append(f"fading must be one of {', '.join(FADING_MODELS)}")
    if cfg.rician_k_factor < 0:
        errors.append("rician_k_factor must be >= 0")
    if cfg.reward_weight_aos < 0 or cfg.reward_weight_energy < 0:
        errors.append("reward weights must be >= 0")

    if cfg.behavior_mode not in BEHAVIOR_MODES:
        errors.append(f"behavior_mode must be one of {', '.join(BEHAVIOR_MODES)}")
    if not _in_unit_interval(cfg.support_threshold):
        errors.append("support_threshold out of range")
    if cfg.penalty_weight < 0 or cfg.margin < 0 or cfg.cql_alpha < 0:
        errors.append("penalty_weight, margin and cql_alpha must be >= 0")
    for name in (
        "hidden_dim",
        "target_sync_steps",
        "batch_size",
        "steps_per_iteration",
        "iterations",
        "checkpoint_every",
        "eval_realizations",
        "episode_length",
        "dataset_size",
        "a2c_window_steps",
        "a2c_max_steps",
    ):
        if getattr(cfg, name) < 1:
            errors.append(f"{name} must be >= 1")
    for name in ("learning_rate", "actor_learning_rate", "critic_learning_rate", "adam_eps"):
        if getattr(cfg, name) <= 0:
            errors.append(f"{name} must be > 0")
    if not (0.0 <= cfg.adam_beta1 < 1.0 and 0.0 <= cfg.adam_beta2 < 1.0):
        errors.append("adam decay rates must lie in [0, 1)")
    if cfg.entropy_weight < 0:
        errors.append("entropy_weight must be >= 0")

    return errors


def require_valid(cfg: SystemConfig) -> SystemConfig:
    """Return ``cfg`` or raise :class:`ConfigError` listing all violations."""
    errors = validate_config(cfg)
    if errors:
        raise ConfigError("invalid configuration: " + "; ".join(errors))
    return cfg


def _coerce(key: str, raw: str) -> Any:
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown configuration key '{key}'")
    kind = _FIELD_TYPES[key]
    text = raw.strip()
    try:
        if kind is int:
            return int(float(text)) if "e" in text.lower() else int(text)
        if kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key} must be a {kind.__name__}, got '{text}'") from None
    return text


def with_overrides(cfg: SystemConfig, overrides: Mapping[str, Any]) -> SystemConfig:
    """Copy of ``cfg`` with ``overrides`` applied; string values are coerced."""
    values = {
        key: _coerce(key, value) if isinstance(value, str) else value
        for key, value in overrides.items()
    }
    for key in values:
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown configuration key '{key}'")
    return replace(cfg, **values)


def parse_key_values(text: str, source: str = "<string>") -> Dict[str, str]:
    """Parse ``key = value`` lines into a dict of raw strings."""
    result: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{number}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{number}: empty key")
        result[key] = value
    return result


def load_config(path: Optional[str] = None) -> SystemConfig:
    """Load a configuration file; missing keys keep their defaults.

    Without ``path`` the per-user file is read when present.
    """
    if path is None:
        if not os.path.exists(DEFAULT_CONFIG_FILE):
            return SystemConfig()
        path = DEFAULT_CONFIG_FILE
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found at {path}") from None
    except PermissionError:
        raise ConfigError(f"permission denied when accessing {path}") from None

    raw = parse_key_values(text, source=path)
    try:
        return with_overrides(SystemConfig(), raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_lines(cfg: SystemConfig) -> List[str]:
    """``key = value`` lines for every field, in declaration order."""
    return [f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}"
            for key, value in asdict(cfg).items()]


def save_config(cfg: SystemConfig, path: str) -> None:
    """Write every key of ``cfg`` to ``path``."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# AoSControl configuration\n")
        handle.write("\n".join(config_lines(cfg)))
        handle.write("\n")


def config_fingerprint(cfg: SystemConfig) -> str:
    """Stable SHA-256 hex digest of the physics fields."""
    digest = hashlib.sha256()
    for key in PHYSICS_FIELDS:
        digest.update(f"{key}={getattr(cfg, key)!r};".encode("utf-8"))
    return digest.hexdigest()
