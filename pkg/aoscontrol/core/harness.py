"""Experiment orchestration: calibration, datasets, convergence and sweeps."""

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..config import SystemConfig, config_lines, parse_key_values, require_valid, with_overrides
from . import dataset as store_io
from .agents import A2cAgent, A2cPolicy, A2cTrainingLog, RandomPolicy, greedy_from_q, train_a2c
from .dataset import ExperienceStore, collect, mix
from .env import EvaluationResult, NcsEnv, evaluate_policy
from .errors import CalibrationError, CheckpointError, ConfigError, MissingArtifactError
from .net import load_checkpoint, save_checkpoint
from .offline import (
    SCHEMES,
    IterationMetrics,
    NeuralBehaviorModel,
    train_offline,
)
from .radio import (
    DeliveryEstimate,
    delivery_probability,
    feasibility_gain,
    feasibility_snr,
    spectral_efficiency_requirement,
)
from .seeding import derive_int, derive_rng
from .types import Policy, StateEncoder

logger = logging.getLogger(__name__)

ALL_SCHEMES = ("proposed", "cql", "a2c", "random")
SWEEP_VARIABLES = ("beta", "alpha", "xi", "irs_elements", "none")
CALIBRATION_BAND = (0.3, 0.9)
CALIBRATION_IRS_SIZES = (25, 75)

METRIC_COLUMNS = ("iteration", "avg_reward", "avg_aos_s", "avg_energy_j", "td_loss", "penalty_loss")
SWEEP_COLUMNS = (
    "value",
    "xi",
    "scheme",
    "avg_aos_s",
    "avg_energy_j",
    "avg_reward",
    "ci_half_width",
    "ci_aos_s",
    "ci_energy_j",
    "num_seeds",
)

EXPERT_FILE = "expert" + store_io.STORE_EXTENSION
RANDOM_FILE = "random" + store_io.STORE_EXTENSION
A2C_CHECKPOINT = "a2c.ckpt"


# ---------------------------------------------------------------------------
# Specs


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: schemes, an optional sweep grid and seeds."""

    name: str = "experiment"
    base: SystemConfig = field(default_factory=SystemConfig)
    schemes: Tuple[str, ...] = ALL_SCHEMES
    sweep_variable: str = "beta"
    sweep_values: Tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    xi_values: Tuple[float, ...] = (0.01, 0.05, 0.25, 1.0)
    seeds: Tuple[int, ...] = (0, 1, 2)
    workers: int = 1

    @property
    def iterations(self) -> int:
        return self.base.iterations

    @property
    def eval_realizations(self) -> int:
        return self.base.eval_realizations


def validate_spec(spec: ExperimentSpec) -> List[str]:
    errors = []
    unknown = [s for s in spec.schemes if s not in ALL_SCHEMES]
    if unknown:
        errors.append(f"unknown schemes: {', '.join(unknown)}")
    if not spec.schemes:
        errors.append("scheme list is empty")
    if spec.sweep_variable not in SWEEP_VARIABLES:
        errors.append(f"sweep variable must be one of {', '.join(SWEEP_VARIABLES)}")
    if spec.sweep_variable != "none" and not spec.sweep_values:
        errors.append("sweep grid is empty")
    if not spec.xi_values:
        errors.append("xi grid is empty")
    if any(not 0.0 <= xi <= 1.0 for xi in spec.xi_values):
        errors.append("xi values must lie in [0, 1]")
    if spec.sweep_variable == "beta" and any(not 0.0 < b <= 1.0 for b in spec.sweep_values):
        errors.append("beta grid must lie in (0, 1]")
    if not spec.seeds:
        errors.append("seed set is empty")
    return errors


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


SPEC_KEYS = ("name", "schemes", "sweep", "values", "xi", "seeds", "workers")


def parse_spec(text: str, base: SystemConfig, source: str = "<spec>") -> ExperimentSpec:
    """Spec files use the config syntax. Keys other than ``SPEC_KEYS`` are
    configuration overrides (for example ``iterations`` or ``alpha``)."""
    raw = parse_key_values(text, source)
    overrides = {k: v for k, v in raw.items() if k not in SPEC_KEYS}
    try:
        spec = ExperimentSpec(
            name=raw.get("name", "experiment"),
            base=with_overrides(base, overrides),
            schemes=tuple(s.strip() for s in raw.get("schemes", ",".join(ALL_SCHEMES)).split(",") if s.strip()),
            sweep_variable=raw.get("sweep", "beta"),
            sweep_values=_floats(raw.get("values", "0.3,0.4,0.5,0.6,0.7,0.8,0.9")),
            xi_values=_floats(raw.get("xi", "0.01,0.05,0.25,1.0")),
            seeds=tuple(int(s) for s in raw.get("seeds", "0,1,2").split(",") if s.strip()),
            workers=int(raw.get("workers", "1")),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    errors = validate_spec(spec)
    if errors:
        raise ConfigError(f"{source}: " + "; ".join(errors))
    return spec


def load_spec(path: str, base: SystemConfig) -> ExperimentSpec:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return parse_spec(handle.read(), base, source=path)
    except FileNotFoundError:
        raise ConfigError(f"spec file not found at {path}") from None


def apply_sweep_value(cfg: SystemConfig, variable: str, value: float) -> SystemConfig:
    """Config for one grid point; ``xi`` and ``none`` leave physics untouched."""
    if variable == "beta":
        return replace(cfg, beta=float(value))
    if variable == "alpha":
        return replace(cfg, alpha=float(value))
    if variable == "irs_elements":
        return replace(cfg, num_irs_elements=int(value))
    return cfg


# ---------------------------------------------------------------------------
# Statistics and CSV output


def confidence_half_width(values: Sequence[float], level: float = 0.95) -> float:
    """Student-t half-width of the mean; NaN with fewer than two values."""
    data = np.asarray(values, dtype=np.float64)
    if data.size < 2:
        return math.nan
    quantile = stats.t.ppf(0.5 + level / 2.0, data.size - 1)
    return float(quantile * data.std(ddof=1) / math.sqrt(data.size))


def nonincreasing_up_to_ci(means: Sequence[float], half_widths: Sequence[float]) -> bool:
    """Each step may rise only by as much as the two intervals overlap."""
    for i in range(len(means) - 1):
        slack = np.nan_to_num(half_widths[i]) + np.nan_to_num(half_widths[i + 1])
        if means[i + 1] > means[i] + slack:
            return False
    return True


def nondecreasing_up_to_ci(means: Sequence[float], half_widths: Sequence[float]) -> bool:
    return nonincreasing_up_to_ci([-m for m in means], half_widths)


def has_interior_peak(means: Sequence[float]) -> bool:
    peak = int(np.argmax(means))
    return 0 < peak < len(means) - 1


def format_value(value: object) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def write_csv(path: str, cfg: SystemConfig, columns: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    """CSV with the resolved configuration as a commented header block."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in config_lines(cfg):
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def metric_rows(metrics: Sequence[IterationMetrics]) -> List[Tuple[object, ...]]:
    return [
        (m.iteration, m.avg_reward, m.avg_aos_s, m.avg_energy_j, m.td_loss, m.penalty_loss)
        for m in metrics
    ]


# ---------------------------------------------------------------------------
# Calibration


@dataclass(frozen=True)
class CalibrationReport:
    spectral_efficiency: float
    snr_threshold: float
    gain_threshold: float
    estimates: Tuple[DeliveryEstimate, ...]
    band: Tuple[float, float]

    def estimate(self, num_irs_elements: int) -> DeliveryEstimate:
        for estimate in self.estimates:
            if estimate.num_irs_elements == num_irs_elements:
                return estimate
        raise KeyError(num_irs_elements)

    @property
    def in_band(self) -> bool:
        low, high = self.band
        return low <= self.estimate(CALIBRATION_IRS_SIZES[0]).two_hop <= high


def calibrate_links(
    cfg: SystemConfig,
    num_samples: int = 100000,
    irs_sizes: Sequence[int] = CALIBRATION_IRS_SIZES,
    seed: Optional[int] = None,
    strict: bool = True,
) -> CalibrationReport:
    """Monte Carlo delivery probabilities at each IRS size.

    With ``strict`` a two-hop success probability at 25 elements outside the
    calibration band raises :class:`CalibrationError`.
    """
    sizes = tuple(sorted(set(irs_sizes) | {CALIBRATION_IRS_SIZES[0]}))
    base_seed = cfg.rng_seed if seed is None else seed
    estimates = tuple(
        delivery_probability(cfg, derive_rng(base_seed, "calibrate", n), num_samples, n)
        for n in sizes
    )
    deadline = cfg.hop1_deadline_s
    report = CalibrationReport(
        spectral_efficiency=spectral_efficiency_requirement(deadline, cfg),
        snr_threshold=feasibility_snr(deadline, cfg),
        gain_threshold=feasibility_gain(deadline, cfg),
        estimates=estimates,
        band=CALIBRATION_BAND,
    )
    if strict and not report.in_band:
        success = report.estimate(CALIBRATION_IRS_SIZES[0]).two_hop
        raise CalibrationError(
            f"two-hop delivery probability {success:.3f} at {CALIBRATION_IRS_SIZES[0]} IRS "
            f"elements is outside [{CALIBRATION_BAND[0]}, {CALIBRATION_BAND[1]}]; adjust "
            f"path_loss_sr={cfg.path_loss_sr!r}, path_loss_rc={cfg.path_loss_rc!r}, "
            f"rayleigh_scale_direct={cfg.rayleigh_scale_direct!r} or "
            f"rayleigh_scale_irs={cfg.rayleigh_scale_irs!r}"
        )
    return report


# ---------------------------------------------------------------------------
# Datasets and baselines


def make_eval_hook(cfg: SystemConfig, realizations: int, seed: int):  # type: ignore[no-untyped-def]
    """Evaluation closure with common random numbers across calls."""
    eval_seed = derive_int(seed, "harness.eval")

    def hook(policy: Policy) -> EvaluationResult:
        return evaluate_policy(lambda: NcsEnv(cfg), policy, realizations, eval_seed)

    return hook


def train_expert(cfg: SystemConfig, seed: int) -> Tuple[A2cAgent, A2cTrainingLog]:
    """A2C trained online to window convergence."""
    agent = A2cAgent.from_config(cfg, derive_rng(seed, "a2c.init"))
    env = NcsEnv(cfg, seed=derive_int(seed, "a2c.env"))
    log = train_a2c(env, agent, cfg.a2c_max_steps, cfg.a2c_window_steps, seed)
    return agent, log


def collect_random(cfg: SystemConfig, num_steps: int, seed: int) -> ExperienceStore:
    env = NcsEnv(cfg, seed=derive_int(seed, "collect.random.env"))
    return collect(RandomPolicy(cfg.num_relays), env, num_steps, derive_int(seed, "collect.random"), "random")


def collect_expert(agent: A2cAgent, cfg: SystemConfig, num_steps: int, seed: int) -> ExperienceStore:
    env = NcsEnv(cfg, seed=derive_int(seed, "collect.expert.env"))
    return collect(agent.snapshot(), env, num_steps, derive_int(seed, "collect.expert"), "expert")


def load_a2c_policy(path: str, cfg: SystemConfig) -> A2cPolicy:
    if not os.path.exists(path):
        raise MissingArtifactError(
            f"A2C checkpoint not found at {path}; run `aoscontrol collect --policy expert` first"
        )
    checkpoint = load_checkpoint(path)
    if checkpoint.agent_type != "a2c":
        raise CheckpointError(f"{path} holds a '{checkpoint.agent_type}' agent, expected 'a2c'")
    return A2cPolicy(checkpoint.nets[0], StateEncoder(cfg), cfg.num_relays)


def load_policy(path: str, cfg: SystemConfig) -> Policy:
    """Policy stored in any agent checkpoint."""
    checkpoint = load_checkpoint(path)
    encoder = StateEncoder(cfg)
    if checkpoint.agent_type == "a2c":
        return A2cPolicy(checkpoint.nets[0], encoder, cfg.num_relays)
    if checkpoint.agent_type in SCHEMES:
        mask_fn = None
        if len(checkpoint.nets) > 1:
            behavior = NeuralBehaviorModel(checkpoint.nets[1], encoder, cfg.support_threshold)
            mask_fn = behavior.support_mask
        return greedy_from_q(checkpoint.nets[0], encoder, cfg.num_relays, mask_fn)
    raise CheckpointError(f"{path}: unknown agent type '{checkpoint.agent_type}'")


def require_store(path: str, cfg: SystemConfig, force: bool = False) -> ExperienceStore:
    if not os.path.exists(path):
        raise MissingArtifactError(
            f"dataset not found at {path}; run `aoscontrol collect` first"
        )
    return store_io.load(path, cfg, force=force)


def save_expert_artifacts(agent: A2cAgent, store: ExperienceStore, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    save_checkpoint(os.path.join(out_dir, A2C_CHECKPOINT), [agent.actor, agent.critic], "a2c")
    store_io.save(store, os.path.join(out_dir, EXPERT_FILE))


# ---------------------------------------------------------------------------
# Convergence


@dataclass(frozen=True)
class ReferenceLine:
    scheme: str
    avg_reward: float
    avg_aos_s: float
    avg_energy_j: float
    ci_half_width: float


@dataclass
class ConvergenceResult:
    curves: Dict[str, List[IterationMetrics]] = field(default_factory=dict)
    references: Dict[str, ReferenceLine] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)


def _mean_curve(runs: Sequence[Sequence[IterationMetrics]]) -> List[IterationMetrics]:
    curve = []
    for rows in zip(*runs):
        curve.append(
            IterationMetrics(
                iteration=rows[0].iteration,
                avg_reward=float(np.mean([r.avg_reward for r in rows])),
                avg_aos_s=float(np.mean([r.avg_aos_s for r in rows])),
                avg_energy_j=float(np.mean([r.avg_energy_j for r in rows])),
                td_loss=float(np.mean([r.td_loss for r in rows])),
                penalty_loss=float(np.mean([r.penalty_loss for r in rows])),
            )
        )
    return curve


def _reference(scheme: str, results: Sequence[EvaluationResult]) -> ReferenceLine:
    rewards = [r.avg_reward for r in results]
    return ReferenceLine(
        scheme=scheme,
        avg_reward=float(np.mean(rewards)),
        avg_aos_s=float(np.mean([r.avg_aos_s for r in results])),
        avg_energy_j=float(np.mean([r.avg_energy_j for r in results])),
        ci_half_width=confidence_half_width(rewards),
    )


def run_convergence(spec: ExperimentSpec, data_dir: str, out_dir: str, force: bool = False) -> ConvergenceResult:
    """Proposed scheme trained on Expert and on Random Data, evaluated every
    iteration, plus A2C and Random reference lines."""
    cfg = require_valid(spec.base)
    expert = require_store(os.path.join(data_dir, EXPERT_FILE), cfg, force)
    random_store = require_store(os.path.join(data_dir, RANDOM_FILE), cfg, force)
    a2c_policy = load_a2c_policy(os.path.join(data_dir, A2C_CHECKPOINT), cfg)

    result = ConvergenceResult()
    for label, store in (("expert", expert), ("random", random_store)):
        runs = []
        for seed in spec.seeds:
            logger.info("convergence: proposed on %s data, seed %d", label, seed)
            hook = make_eval_hook(cfg, cfg.eval_realizations, seed)
            trained = train_offline(store.records, cfg, "proposed", hook, seed)
            runs.append(trained.metrics)
        curve = _mean_curve(runs)
        name = f"convergence_proposed_{label}"
        result.curves[name] = curve
        path = os.path.join(out_dir, f"{name}.csv")
        write_csv(path, cfg, METRIC_COLUMNS, metric_rows(curve))
        result.files.append(path)

    policies: Dict[str, Policy] = {"a2c": a2c_policy, "random": RandomPolicy(cfg.num_relays)}
    for scheme, policy in policies.items():
        evaluations = [make_eval_hook(cfg, cfg.eval_realizations, seed)(policy) for seed in spec.seeds]
        line = _reference(scheme, evaluations)
        result.references[scheme] = line
        path = os.path.join(out_dir, f"reference_{scheme}.csv")
        write_csv(
            path,
            cfg,
            ("scheme", "avg_reward", "avg_aos_s", "avg_energy_j", "ci_half_width"),
            [(line.scheme, line.avg_reward, line.avg_aos_s, line.avg_energy_j, line.ci_half_width)],
        )
        result.files.append(path)
    return result


def iterations_to_converge(curve: Sequence[IterationMetrics], tolerance: float = 0.05) -> int:
    """First iteration from which the reward stays within ``tolerance`` of
    the final reward."""
    final = curve[-1].avg_reward
    band = tolerance * abs(final)
    converged_at = curve[-1].iteration
    for metrics in reversed(curve):
        if abs(metrics.avg_reward - final) > band:
            break
        converged_at = metrics.iteration
    return converged_at


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepCell:
    """One (grid value, seed) job."""

    cfg: SystemConfig
    value: float
    seed: int
    schemes: Tuple[str, ...]
    xi_values: Tuple[float, ...]


@dataclass(frozen=True)
class CellResult:
    value: float
    xi: Optional[float]
    scheme: str
    seed: int
    evaluation: EvaluationResult


def run_cell(cell: SweepCell) -> List[CellResult]:
    """Train every requested scheme at one grid point and seed."""
    cfg, seed = cell.cfg, cell.seed
    hook = make_eval_hook(cfg, cfg.eval_realizations, seed)
    results: List[CellResult] = []
    offline = [s for s in cell.schemes if s in SCHEMES]

    if "random" in cell.schemes:
        results.append(CellResult(cell.value, None, "random", seed, hook(RandomPolicy(cfg.num_relays))))

    if offline or "a2c" in cell.schemes:
        agent, _ = train_expert(cfg, seed)
        if "a2c" in cell.schemes:
            results.append(CellResult(cell.value, None, "a2c", seed, hook(agent.snapshot())))
        if offline:
            expert = collect_expert(agent, cfg, cfg.dataset_size, seed)
            random_store = collect_random(cfg, cfg.dataset_size, seed)
            for xi in cell.xi_values:
                mixed = mix(expert, random_store, xi, cfg.dataset_size, derive_int(seed, "sweep.mix"))
                for scheme in offline:
                    trained = train_offline(
                        mixed.records, cfg, scheme, hook, seed, eval_every=cfg.iterations
                    )
                    final = trained.metrics[-1]
                    evaluation = EvaluationResult(
                        final.avg_reward, final.avg_aos_s, final.avg_energy_j, cfg.eval_realizations
                    )
                    results.append(CellResult(cell.value, xi, scheme, seed, evaluation))
    logger.info("sweep cell value=%s seed=%d done", cell.value, seed)
    return results


@dataclass(frozen=True)
class SweepRow:
    value: float
    xi: Optional[float]
    scheme: str
    avg_aos_s: float
    avg_energy_j: float
    avg_reward: float
    ci_half_width: float
    ci_aos_s: float
    ci_energy_j: float
    num_seeds: int

    def as_tuple(self) -> Tuple[object, ...]:
        xi = "-" if self.xi is None else self.xi
        return (
            self.value,
            xi,
            self.scheme,
            self.avg_aos_s,
            self.avg_energy_j,
            self.avg_reward,
            self.ci_half_width,
            self.ci_aos_s,
            self.ci_energy_j,
            self.num_seeds,
        )


def aggregate(results: Iterable[CellResult]) -> List[SweepRow]:
    """Mean and Student-t half-widths over seeds, in a canonical order."""
    groups: Dict[Tuple[float, float, str], List[CellResult]] = {}
    for result in results:
        xi_key = -1.0 if result.xi is None else result.xi
        groups.setdefault((result.value, xi_key, result.scheme), []).append(result)

    rows = []
    for (value, xi_key, scheme), members in sorted(groups.items()):
        members = sorted(members, key=lambda r: r.seed)
        rewards = [m.evaluation.avg_reward for m in members]
        aos = [m.evaluation.avg_aos_s for m in members]
        energy = [m.evaluation.avg_energy_j for m in members]
        rows.append(
            SweepRow(
                value=value,
                xi=None if xi_key < 0 else xi_key,
                scheme=scheme,
                avg_aos_s=float(np.mean(aos)),
                avg_energy_j=float(np.mean(energy)),
                avg_reward=float(np.mean(rewards)),
                ci_half_width=confidence_half_width(rewards),
                ci_aos_s=confidence_half_width(aos),
                ci_energy_j=confidence_half_width(energy),
                num_seeds=len(members),
            )
        )
    return rows


def sweep_cells(spec: ExperimentSpec) -> List[SweepCell]:
    values = spec.sweep_values if spec.sweep_variable != "none" else (0.0,)
    cells = []
    for value in values:
        cfg = require_valid(apply_sweep_value(spec.base, spec.sweep_variable, value))
        xi_values = (float(value),) if spec.sweep_variable == "xi" else spec.xi_values
        for seed in spec.seeds:
            cells.append(SweepCell(cfg, float(value), seed, spec.schemes, xi_values))
    return cells


def run_sweep(spec: ExperimentSpec, out_dir: str) -> List[SweepRow]:
    """Run every grid cell, in a process pool when ``spec.workers > 1``."""
    errors = validate_spec(spec)
    if errors:
        raise ConfigError("; ".join(errors))
    cells = sweep_cells(spec)
    results: List[CellResult] = []
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for cell_results in pool.map(run_cell, cells):
                results.extend(cell_results)
    else:
        for cell in cells:
            results.extend(run_cell(cell))

    rows = aggregate(results)
    path = os.path.join(out_dir, f"{spec.name}_{spec.sweep_variable}_sweep.csv")
    columns = (spec.sweep_variable,) + SWEEP_COLUMNS[1:]
    write_csv(path, spec.base, columns, [row.as_tuple() for row in rows])
    for check in sweep_trends(rows, spec.sweep_variable):
        xi = "" if check.xi is None else f" xi={check.xi!r}"
        logger.info("%s [%s%s]: %s", check.claim, check.scheme, xi, "holds" if check.holds else "fails")
    return rows


@dataclass(frozen=True)
class TrendCheck:
    """One qualitative claim checked against aggregated sweep rows."""

    claim: str
    scheme: str
    xi: Optional[float]
    holds: bool


def _xi_series(rows: Sequence[SweepRow]) -> List[SweepRow]:
    return sorted((r for r in rows if r.xi is not None), key=lambda r: float(r.xi or 0.0))


def sweep_trends(rows: Sequence[SweepRow], variable: str) -> List[TrendCheck]:
    """Monotonicity and comparison checks over a finished sweep.

    Series with too few points for a claim are skipped.
    """
    checks: List[TrendCheck] = []
    by_series: Dict[Tuple[str, float], List[SweepRow]] = {}
    for row in rows:
        by_series.setdefault((row.scheme, -1.0 if row.xi is None else row.xi), []).append(row)

    if variable == "beta":
        for (scheme, xi_key), series in sorted(by_series.items()):
            series = sorted(series, key=lambda r: r.value)
            xi = None if xi_key < 0 else xi_key
            if len(series) >= 2:
                holds = nonincreasing_up_to_ci([r.avg_aos_s for r in series], [r.ci_aos_s for r in series])
                checks.append(TrendCheck("avg AoS nonincreasing in beta", scheme, xi, holds))
            if scheme == "proposed" and len(series) >= 3:
                holds = has_interior_peak([r.avg_energy_j for r in series])
                checks.append(TrendCheck("avg energy peaks inside the beta range", scheme, xi, holds))

    # Grid points that share a dataset mix; a xi sweep has a single one.
    points: Dict[Tuple[Optional[float], str], List[SweepRow]] = {}
    for row in rows:
        point = None if variable == "xi" else row.value
        points.setdefault((point, row.scheme), []).append(row)

    schemes = sorted({r.scheme for r in rows if r.xi is not None})
    for scheme in schemes:
        verdicts = []
        for (point, name), members in points.items():
            series = _xi_series(members)
            if name == scheme and len(series) >= 2:
                verdicts.append(
                    nondecreasing_up_to_ci([r.avg_reward for r in series], [r.ci_half_width for r in series])
                )
        if verdicts:
            checks.append(TrendCheck("avg reward nondecreasing in xi", scheme, None, all(verdicts)))

    def at(point: Optional[float], scheme: str, xi: Optional[float]) -> Optional[SweepRow]:
        for row in points.get((point, scheme), []):
            if row.xi == xi:
                return row
        return None

    grid = sorted({p for p, _ in points}, key=lambda p: -math.inf if p is None else p)
    beats: List[bool] = []
    matches_random: List[bool] = []
    for point in grid:
        proposed_5 = at(point, "proposed", 0.05)
        cql_25 = at(point, "cql", 0.25)
        if proposed_5 is not None and cql_25 is not None:
            beats.append(proposed_5.avg_reward >= cql_25.avg_reward)
        proposed_1 = at(point, "proposed", 0.01)
        random_ref = at(point, "random", None)
        if proposed_1 is not None and random_ref is not None:
            slack = np.nan_to_num(proposed_1.ci_half_width) + np.nan_to_num(random_ref.ci_half_width)
            matches_random.append(bool(abs(proposed_1.avg_reward - random_ref.avg_reward) <= slack))
    if beats:
        checks.append(TrendCheck("reward at xi=0.05 >= CQL at xi=0.25", "proposed", 0.05, all(beats)))
    if matches_random:
        checks.append(TrendCheck("reward at xi=0.01 overlaps Random", "proposed", 0.01, all(matches_random)))
    return checks


def run_beta_sweep(spec: ExperimentSpec, out_dir: str) -> List[SweepRow]:
    """The accurate-inference sweep over the experiment's base configuration."""
    return run_sweep(replace(spec, sweep_variable="beta"), out_dir)
