"""Tests for calibration, spec parsing, statistics and the experiment runners."""

import math
import os
import tempfile
from dataclasses import replace

import pytest

from aoscontrol.config import SystemConfig
from aoscontrol.core import dataset as store_io
from aoscontrol.core import harness
from aoscontrol.core.errors import CalibrationError, ConfigError, MissingArtifactError
from aoscontrol.core.offline import IterationMetrics


def tiny_config(**overrides: object) -> SystemConfig:
    base = replace(
        SystemConfig(),
        hidden_dim=4,
        batch_size=16,
        iterations=2,
        steps_per_iteration=2,
        eval_realizations=30,
        episode_length=50,
        dataset_size=200,
        a2c_window_steps=50,
        a2c_max_steps=100,
        behavior_mode="tabular",
    )
    return replace(base, **overrides)


def read_rows(path: str):  # type: ignore[no-untyped-def]
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    comments = [line for line in lines if line.startswith("#")]
    rows = [line for line in lines if not line.startswith("#")]
    return comments, rows


# ---------------------------------------------------------------------------
# Calibration


def test_calibration_report() -> None:
    """Test the feasibility numbers and band check at default settings."""
    report = harness.calibrate_links(SystemConfig(), num_samples=20_000)
    assert report.spectral_efficiency == pytest.approx(12.4)
    assert report.snr_threshold == pytest.approx(5403.6, abs=0.2)
    assert [e.num_irs_elements for e in report.estimates] == [25, 75]
    assert report.in_band
    assert report.estimate(75).two_hop >= report.estimate(25).two_hop


def test_calibration_out_of_band_names_parameters() -> None:
    """Test the actionable calibration failure."""
    cfg = replace(SystemConfig(), path_loss_sr=1e-20, path_loss_rc=1e-20)
    with pytest.raises(CalibrationError, match="path_loss_sr"):
        harness.calibrate_links(cfg, num_samples=1000)
    report = harness.calibrate_links(cfg, num_samples=1000, strict=False)
    assert not report.in_band


def test_calibration_with_silent_transmitter() -> None:
    """Test that zero transmit power reports zero delivery instead of failing."""
    cfg = replace(SystemConfig(), tx_power_w=0.0)
    report = harness.calibrate_links(cfg, num_samples=1000, strict=False)
    assert math.isinf(report.gain_threshold)
    for estimate in report.estimates:
        assert estimate.single_hop == 0.0
        assert estimate.two_hop == 0.0
        assert estimate.best_relay == 0.0
    with pytest.raises(CalibrationError):
        harness.calibrate_links(cfg, num_samples=1000)


# ---------------------------------------------------------------------------
# Statistics


def test_confidence_half_width() -> None:
    """Test the Student-t half-width on three values."""
    assert harness.confidence_half_width([1.0, 2.0, 3.0]) == pytest.approx(4.302653 / math.sqrt(3.0), rel=1e-5)
    assert math.isnan(harness.confidence_half_width([1.0]))


def test_trend_helpers() -> None:
    """Test the CI-overlap monotonicity and interior-peak checks."""
    assert harness.nonincreasing_up_to_ci([3.0, 2.0, 2.1, 1.0], [0.1, 0.1, 0.1, 0.1])
    assert not harness.nonincreasing_up_to_ci([3.0, 2.0, 2.5], [0.1, 0.1, 0.1])
    assert harness.nondecreasing_up_to_ci([-3.0, -2.0, -2.05], [0.1, 0.1, 0.1])
    assert harness.has_interior_peak([1.0, 3.0, 2.0])
    assert not harness.has_interior_peak([3.0, 2.0, 1.0])


def beta_sweep_rows(late_aos: float = 1.0):  # type: ignore[no-untyped-def]
    betas = (0.3, 0.6, 0.9)
    series = {
        ("proposed", 0.05): ((3.0, 2.0, late_aos), (0.1, 0.3, 0.2), (-1.0, -0.9, -0.8)),
        ("proposed", 0.01): ((3.0, 2.5, 2.0), (0.1, 0.2, 0.15), (-2.0, -1.9, -1.8)),
        ("cql", 0.25): ((3.0, 2.0, 1.5), (0.1, 0.1, 0.1), (-1.5, -1.4, -1.3)),
        ("random", None): ((2.5, 2.4, 2.3), (0.1, 0.1, 0.1), (-2.0, -1.95, -1.8)),
    }
    rows = []
    for (scheme, xi), (aos, energy, reward) in series.items():
        for i, beta in enumerate(betas):
            rows.append(harness.SweepRow(beta, xi, scheme, aos[i], energy[i], reward[i], 0.05, 0.1, 0.01, 3))
    return rows


def test_sweep_trends_on_beta_grid() -> None:
    """Test every qualitative claim on rows where all of them hold."""
    checks = harness.sweep_trends(beta_sweep_rows(), "beta")
    claims = [(c.claim, c.scheme, c.xi) for c in checks]
    assert claims.count(("avg AoS nonincreasing in beta", "proposed", 0.05)) == 1
    assert sum(c.claim == "avg AoS nonincreasing in beta" for c in checks) == 4
    assert sum(c.claim == "avg energy peaks inside the beta range" for c in checks) == 2
    assert ("avg reward nondecreasing in xi", "proposed", None) in claims
    assert ("avg reward nondecreasing in xi", "cql", None) not in claims
    assert ("reward at xi=0.05 >= CQL at xi=0.25", "proposed", 0.05) in claims
    assert ("reward at xi=0.01 overlaps Random", "proposed", 0.01) in claims
    assert all(c.holds for c in checks)


def test_sweep_trends_flag_rising_aos() -> None:
    """Test that an AoS rise beyond the intervals is reported."""
    checks = harness.sweep_trends(beta_sweep_rows(late_aos=2.5), "beta")
    failing = [(c.claim, c.scheme, c.xi) for c in checks if not c.holds]
    assert failing == [("avg AoS nonincreasing in beta", "proposed", 0.05)]


def test_sweep_trends_on_xi_grid() -> None:
    """Test that a xi sweep compares schemes across grid values."""
    rows = [
        harness.SweepRow(xi, xi, "proposed", 1.0, 0.1, reward, 0.05, 0.1, 0.01, 3)
        for xi, reward in ((0.01, -2.0), (0.05, -1.2), (0.25, -1.0))
    ] + [harness.SweepRow(0.25, 0.25, "cql", 1.0, 0.1, -1.5, 0.05, 0.1, 0.01, 3)]
    checks = harness.sweep_trends(rows, "xi")
    verdicts = {c.claim: c.holds for c in checks}
    assert verdicts == {
        "avg reward nondecreasing in xi": True,
        "reward at xi=0.05 >= CQL at xi=0.25": True,
    }


def test_iterations_to_converge() -> None:
    """Test the 5% band rule on a synthetic curve."""
    rewards = [-10.0, -5.0, -2.2, -2.05, -2.0, -2.01]
    curve = [IterationMetrics(i + 1, r, 0.0, 0.0, 0.0, 0.0) for i, r in enumerate(rewards)]
    assert harness.iterations_to_converge(curve) == 4


def test_write_csv_has_config_header() -> None:
    """Test the commented configuration block."""
    cfg = SystemConfig()
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "out", "table.csv")
        harness.write_csv(path, cfg, ("a", "b"), [(1, 0.5), (2, math.nan)])
        comments, rows = read_rows(path)
    assert "# alpha = 0.5" in comments
    assert "# rng_seed = 0" in comments
    assert rows == ["a,b", "1,0.5", "2,nan"]


# ---------------------------------------------------------------------------
# Specs


def test_parse_spec() -> None:
    """Test spec keys and configuration overrides."""
    text = "name = smoke\nschemes = random, a2c\nsweep = alpha\nvalues = 0.2, 0.8\nseeds = 4,5\niterations = 7\n"
    spec = harness.parse_spec(text, SystemConfig())
    assert spec.name == "smoke"
    assert spec.schemes == ("random", "a2c")
    assert spec.sweep_variable == "alpha"
    assert spec.sweep_values == (0.2, 0.8)
    assert spec.seeds == (4, 5)
    assert spec.iterations == 7


def test_parse_spec_rejects_bad_values() -> None:
    """Test spec validation errors."""
    with pytest.raises(ConfigError, match="unknown schemes"):
        harness.parse_spec("schemes = bcq\n", SystemConfig())
    with pytest.raises(ConfigError, match="beta grid"):
        harness.parse_spec("sweep = beta\nvalues = 0.0, 0.5\n", SystemConfig())
    with pytest.raises(ConfigError, match="unknown configuration key"):
        harness.parse_spec("relays = 3\n", SystemConfig())
    with pytest.raises(ConfigError, match="not found"):
        harness.load_spec("/nonexistent/spec.conf", SystemConfig())


def test_apply_sweep_value() -> None:
    """Test grid values mapping onto configuration fields."""
    cfg = SystemConfig()
    assert harness.apply_sweep_value(cfg, "beta", 0.3).beta == 0.3
    assert harness.apply_sweep_value(cfg, "irs_elements", 25.0).num_irs_elements == 25
    assert harness.apply_sweep_value(cfg, "xi", 0.5) == cfg


# ---------------------------------------------------------------------------
# Runners


def test_run_convergence_requires_datasets() -> None:
    """Test the missing-artifact message."""
    with tempfile.TemporaryDirectory() as tmp:
        spec = harness.ExperimentSpec(base=tiny_config(), seeds=(0,))
        with pytest.raises(MissingArtifactError, match="collect"):
            harness.run_convergence(spec, tmp, tmp)


def test_run_convergence_end_to_end() -> None:
    """Test curve files and reference lines on a tiny setup."""
    cfg = tiny_config()
    with tempfile.TemporaryDirectory() as tmp:
        agent, _ = harness.train_expert(cfg, seed=0)
        harness.save_expert_artifacts(agent, harness.collect_expert(agent, cfg, 200, seed=0), tmp)
        store_io.save(harness.collect_random(cfg, 200, seed=0), os.path.join(tmp, harness.RANDOM_FILE))

        spec = harness.ExperimentSpec(base=cfg, seeds=(0,))
        result = harness.run_convergence(spec, tmp, tmp)
        assert set(result.curves) == {"convergence_proposed_expert", "convergence_proposed_random"}
        assert set(result.references) == {"a2c", "random"}
        for name in result.curves:
            _, rows = read_rows(os.path.join(tmp, f"{name}.csv"))
            assert rows[0] == ",".join(harness.METRIC_COLUMNS)
            assert len(rows) - 1 == cfg.iterations


def test_sweep_rows_and_reproducibility() -> None:
    """Test aggregation and byte-identical reruns of a reference-only sweep."""
    spec = harness.ExperimentSpec(
        name="smoke",
        base=tiny_config(),
        schemes=("random",),
        sweep_variable="beta",
        sweep_values=(0.5, 0.9),
        seeds=(0, 1),
    )
    with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
        rows = harness.run_beta_sweep(spec, first)
        harness.run_sweep(spec, second)
        with open(os.path.join(first, "smoke_beta_sweep.csv"), "rb") as a, open(
            os.path.join(second, "smoke_beta_sweep.csv"), "rb"
        ) as b:
            assert a.read() == b.read()
    assert [(r.value, r.scheme, r.num_seeds) for r in rows] == [(0.5, "random", 2), (0.9, "random", 2)]
    assert all(r.xi is None for r in rows)
    assert all(not math.isnan(r.ci_half_width) for r in rows)


def test_parallel_sweep_matches_sequential() -> None:
    """Test that worker processes reproduce the sequential result."""
    spec = harness.ExperimentSpec(
        base=tiny_config(), schemes=("random",), sweep_variable="alpha", sweep_values=(0.2, 0.8), seeds=(0, 1)
    )
    with tempfile.TemporaryDirectory() as tmp:
        sequential = harness.run_sweep(spec, tmp)
        parallel = harness.run_sweep(replace(spec, workers=2), tmp)
    assert sequential == parallel


def test_sweep_trains_offline_schemes() -> None:
    """Test a single-point sweep with the learned schemes."""
    spec = harness.ExperimentSpec(
        base=tiny_config(),
        schemes=("proposed", "cql", "a2c"),
        sweep_variable="none",
        xi_values=(0.25,),
        seeds=(0,),
    )
    with tempfile.TemporaryDirectory() as tmp:
        rows = harness.run_sweep(spec, tmp)
    schemes = {(r.scheme, r.xi) for r in rows}
    assert schemes == {("a2c", None), ("proposed", 0.25), ("cql", 0.25)}
    assert all(r.avg_reward <= 0.0 for r in rows)
    assert all(r.num_seeds == 1 for r in rows)
