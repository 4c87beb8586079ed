"""IRS-assisted link realizations, hop budgets and sensor energy."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import SystemConfig


@dataclass(frozen=True)
class LinkRealization:
    """Effective power gains of one slot, indexed by relay."""

    gains_sr: np.ndarray
    gains_rc: np.ndarray


@dataclass(frozen=True)
class HopBudget:
    """Outcome of pushing one semantic sample over one hop."""

    rate_bps: float
    tx_time_s: float
    feasible: bool
    energy_j: float


@dataclass(frozen=True)
class TwoHopOutcome:
    """Decode-and-forward delivery through one relay."""

    delivered: bool
    sensor_energy_j: float
    hop1: HopBudget
    hop2: HopBudget


@dataclass(frozen=True)
class DeliveryEstimate:
    """Monte Carlo delivery probabilities at one IRS size."""

    num_irs_elements: int
    single_hop: float
    two_hop: float
    best_relay: float
    num_samples: int


def _fading_amplitudes(
    rng: np.random.Generator, scale: float, size: tuple, cfg: SystemConfig
) -> np.ndarray:
    if cfg.fading == "rician":
        k = cfg.rician_k_factor
        los = scale * math.sqrt(2.0 * k / (k + 1.0))
        diffuse = scale * math.sqrt(1.0 / (k + 1.0))
        in_phase = los + diffuse * rng.standard_normal(size)
        quadrature = diffuse * rng.standard_normal(size)
        return np.hypot(in_phase, quadrature)
    return rng.rayleigh(scale, size)


def draw_link_gains(
    cfg: SystemConfig,
    rng: np.random.Generator,
    num_slots: int,
    num_irs_elements: Optional[int] = None,
) -> np.ndarray:
    """Gains for ``num_slots`` independent slots, shape ``(num_slots, 2, R)``.

    Axis 1 holds sensor-relay then relay-controller links. The IRS is
    phase-aligned with the direct path, so amplitudes add coherently:
    ``a_d + N * a_r``.
    """
    elements = cfg.num_irs_elements if num_irs_elements is None else num_irs_elements
    size = (num_slots, 2, cfg.num_relays)
    direct = _fading_amplitudes(rng, cfg.rayleigh_scale_direct, size, cfg)
    reflected = _fading_amplitudes(rng, cfg.rayleigh_scale_irs, size, cfg)
    amplitude = direct + elements * reflected
    path_loss = np.array([cfg.path_loss_sr, cfg.path_loss_rc])[None, :, None]
    return path_loss * amplitude ** 2


def draw_links(cfg: SystemConfig, rng: np.random.Generator) -> LinkRealization:
    """Fresh channel realization for one slot."""
    gains = draw_link_gains(cfg, rng, 1)[0]
    return LinkRealization(gains_sr=gains[0], gains_rc=gains[1])


def achievable_rate(gain: float, cfg: SystemConfig) -> float:
    """Shannon rate at full transmit power, bits per second."""
    return cfg.bandwidth_hz * math.log2(1.0 + cfg.tx_power_w * gain / cfg.noise_power_w)


def hop_budget(gain: float, deadline_s: float, cfg: SystemConfig) -> HopBudget:
    """Rate, airtime and energy of sending one sample within ``deadline_s``.

    An infeasible hop transmits until the deadline and is charged for it.
    """
    rate = achievable_rate(gain, cfg)
    tx_time = cfg.sample_bits / rate if rate > 0 else math.inf
    return HopBudget(
        rate_bps=rate,
        tx_time_s=tx_time,
        feasible=tx_time <= deadline_s,
        energy_j=cfg.tx_power_w * min(tx_time, deadline_s),
    )


def spectral_efficiency_requirement(deadline_s: float, cfg: SystemConfig) -> float:
    """Bits/s/Hz needed to deliver one sample within ``deadline_s``."""
    return cfg.sample_bits / (cfg.bandwidth_hz * deadline_s)


def feasibility_snr(deadline_s: float, cfg: SystemConfig) -> float:
    return 2.0 ** spectral_efficiency_requirement(deadline_s, cfg) - 1.0


def feasibility_gain(deadline_s: float, cfg: SystemConfig) -> float:
    """Smallest gain that meets the hop deadline; infinite for a silent transmitter."""
    if cfg.tx_power_w <= 0:
        return math.inf
    return feasibility_snr(deadline_s, cfg) * cfg.noise_power_w / cfg.tx_power_w


def two_hop_outcome(links: LinkRealization, relay: int, cfg: SystemConfig) -> TwoHopOutcome:
    """Sensor to ``relay`` in the first part of the slot, relay to controller
    in the rest. Relay energy is not charged to the sensor."""
    if not 0 <= relay < cfg.num_relays:
        raise ValueError(f"relay index {relay} outside [0, {cfg.num_relays - 1}]")
    hop1 = hop_budget(float(links.gains_sr[relay]), cfg.hop1_deadline_s, cfg)
    hop2 = hop_budget(float(links.gains_rc[relay]), cfg.hop2_deadline_s, cfg)
    energy = cfg.sampling_energy_j + cfg.extraction_energy_j + hop1.energy_j
    return TwoHopOutcome(
        delivered=hop1.feasible and hop2.feasible,
        sensor_energy_j=energy,
        hop1=hop1,
        hop2=hop2,
    )


def _feasible(gains: np.ndarray, deadline_s: float, cfg: SystemConfig) -> np.ndarray:
    rate = cfg.bandwidth_hz * np.log2(1.0 + cfg.tx_power_w * gains / cfg.noise_power_w)
    with np.errstate(divide="ignore"):
        tx_time = np.where(rate > 0, cfg.sample_bits / np.where(rate > 0, rate, 1.0), np.inf)
    return tx_time <= deadline_s


def delivery_probability(
    cfg: SystemConfig,
    rng: np.random.Generator,
    num_samples: int,
    num_irs_elements: Optional[int] = None,
) -> DeliveryEstimate:
    """Estimate delivery through relay 0 and through the best relay."""
    elements = cfg.num_irs_elements if num_irs_elements is None else num_irs_elements
    gains = draw_link_gains(cfg, rng, num_samples, elements)
    hop1 = _feasible(gains[:, 0, :], cfg.hop1_deadline_s, cfg)
    hop2 = _feasible(gains[:, 1, :], cfg.hop2_deadline_s, cfg)
    both = hop1 & hop2
    return DeliveryEstimate(
        num_irs_elements=elements,
        single_hop=float(hop1[:, 0].mean()),
        two_hop=float(both[:, 0].mean()),
        best_relay=float(both.any(axis=1).mean()),
        num_samples=num_samples,
    )
