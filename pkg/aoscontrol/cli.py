"""Command-line interface for AoSControl."""

import logging
import os
import sys
from dataclasses import asdict, dataclass, replace
from typing import Dict, NoReturn, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler

from aoscontrol import __version__
from aoscontrol.config import (
    DEFAULT_CONFIG_FILE,
    SystemConfig,
    config_lines,
    load_config,
    require_valid,
    save_config,
    with_overrides,
)
from aoscontrol.core import dataset as store_io
from aoscontrol.core import harness
from aoscontrol.core.agents import RandomPolicy
from aoscontrol.core.env import EvaluationResult, NcsEnv, evaluate_policy
from aoscontrol.core.errors import AosControlError
from aoscontrol.core.net import save_checkpoint
from aoscontrol.core.offline import SCHEMES, offline_checkpoint_nets, train_offline
from aoscontrol.core.seeding import derive_int
from aoscontrol.core.types import Policy
from aoscontrol.ui.console import ConsoleUI

app = typer.Typer(help="AoSControl - semantic-aware sampling and relay selection for networked control")
console = Console()
logger = logging.getLogger("aoscontrol")

# Create a subcommand group for configuration
config_app = typer.Typer(help="Configuration commands")
app.add_typer(config_app, name="config")


@dataclass
class RunContext:
    config_path: Optional[str] = None
    seed: Optional[int] = None
    out_dir: str = "results"


state = RunContext()


def setup_logging(verbose: bool, debug: bool) -> None:
    level = logging.DEBUG if debug else (logging.INFO if verbose else logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=debug)],
        force=True,
    )


def fail(message: str) -> NoReturn:
    console.print(f"[red]Error: {message}[/red]")
    sys.exit(1)


def current_config() -> SystemConfig:
    cfg = load_config(state.config_path)
    if state.seed is not None:
        cfg = replace(cfg, rng_seed=state.seed)
    return require_valid(cfg)


def out_path(name: str) -> str:
    os.makedirs(state.out_dir, exist_ok=True)
    return os.path.join(state.out_dir, name)


@app.callback()
def main_options(
    config_path: Optional[str] = typer.Option(
        None, "--config", "-c", help="Configuration file (defaults to the per-user file)"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Root seed (overrides rng_seed)"),
    out_dir: str = typer.Option("results", "--out", "-o", help="Directory for datasets, checkpoints and CSVs"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress"),
    debug: bool = typer.Option(False, "--debug", "-d", help="Enable debug output"),
) -> None:
    """Global options shared by every command."""
    state.config_path = config_path
    state.seed = seed
    state.out_dir = out_dir
    setup_logging(verbose, debug)


def _target_config_file() -> str:
    return state.config_path or DEFAULT_CONFIG_FILE


@config_app.command("get")
def config_get(key: str = typer.Argument(..., help="Configuration key to get")) -> None:
    """Get a configuration value."""
    try:
        values = asdict(current_config())
    except AosControlError as exc:
        fail(str(exc))
    if key not in values:
        console.print(f"[yellow]Configuration key '{key}' not found[/yellow]")
    else:
        console.print(f"{key} = {values[key]}")


@config_app.command("set")
def config_set(
    key: str = typer.Argument(..., help="Configuration key to set"),
    value: str = typer.Argument(..., help="Value to set"),
) -> None:
    """Set a configuration value."""
    try:
        cfg = require_valid(with_overrides(load_config(state.config_path), {key: value}))
        save_config(cfg, _target_config_file())
    except AosControlError as exc:
        fail(str(exc))
    console.print(f"[green]Configuration updated: {key} = {getattr(cfg, key)}[/green]")


@config_app.command("list")
def config_list() -> None:
    """List all configuration values."""
    try:
        cfg = current_config()
    except AosControlError as exc:
        fail(str(exc))
    console.print("[bold]AoSControl Configuration[/bold]")
    for line in config_lines(cfg):
        console.print(line, highlight=False)


@config_app.command("reset")
def config_reset() -> None:
    """Reset configuration to defaults."""
    save_config(SystemConfig(), _target_config_file())
    console.print("[green]Configuration reset to defaults[/green]")
    config_list()


@app.command()
def calibrate(
    samples: int = typer.Option(100000, "--samples", "-n", help="Channel draws per IRS size"),
    strict: bool = typer.Option(True, "--strict/--no-strict", help="Fail outside the calibration band"),
    format_type: str = typer.Option("table", "--format", help="Output format: table, plain, or csv"),
) -> None:
    """Estimate single- and two-hop delivery probabilities."""
    try:
        cfg = current_config()
        report = harness.calibrate_links(cfg, num_samples=samples, strict=False)
        ConsoleUI(format_type).display_calibration(report)
        if strict and not report.in_band:
            harness.calibrate_links(cfg, num_samples=samples, strict=True)
    except (AosControlError, ValueError) as exc:
        fail(str(exc))


@app.command()
def collect(
    policy: str = typer.Option("random", "--policy", "-p", help="Behavior policy: random or expert"),
    steps: Optional[int] = typer.Option(None, "--steps", "-n", help="Transitions to collect (default dataset_size)"),
) -> None:
    """Collect an experience store; ``expert`` also trains and saves the A2C expert."""
    try:
        cfg = current_config()
        num_steps = steps or cfg.dataset_size
        seed = cfg.rng_seed
        if policy == "random":
            store = harness.collect_random(cfg, num_steps, seed)
            path = out_path(harness.RANDOM_FILE)
            store_io.save(store, path)
        elif policy == "expert":
            console.print("[blue]Training the A2C expert...[/blue]")
            agent, log = harness.train_expert(cfg, seed)
            if not log.converged:
                console.print(f"[yellow]A2C stopped at {log.steps} steps without converging[/yellow]")
            store = harness.collect_expert(agent, cfg, num_steps, seed)
            harness.save_expert_artifacts(agent, store, state.out_dir)
            path = out_path(harness.EXPERT_FILE)
        else:
            fail("policy must be 'random' or 'expert'")
    except (AosControlError, ValueError) as exc:
        fail(str(exc))
    console.print(f"[green]Wrote {len(store)} transitions to {path}[/green]")


@app.command()
def mix(
    xi: float = typer.Option(..., "--xi", help="Expert fraction in [0, 1]"),
    total: Optional[int] = typer.Option(None, "--total", "-n", help="Mixed size (default dataset_size)"),
    force: bool = typer.Option(False, "--force", help="Ignore configuration fingerprint mismatches"),
) -> None:
    """Mix the collected expert and random stores."""
    try:
        cfg = current_config()
        expert = harness.require_store(out_path(harness.EXPERT_FILE), cfg, force)
        random_store = harness.require_store(out_path(harness.RANDOM_FILE), cfg, force)
        mixed = store_io.mix(expert, random_store, xi, total or cfg.dataset_size, cfg.rng_seed)
        path = out_path(f"mixed_{xi!r}{store_io.STORE_EXTENSION}")
        store_io.save(mixed, path)
    except (AosControlError, ValueError) as exc:
        fail(str(exc))
    console.print(f"[green]Wrote {len(mixed)} transitions to {path}[/green]")


@app.command()
def inspect(path: str = typer.Argument(..., help="Experience store to describe")) -> None:
    """Show an experience store header."""
    try:
        store = store_io.load(path)
    except AosControlError as exc:
        fail(str(exc))
    ConsoleUI().display_store(store, path)


@app.command()
def train(
    scheme: str = typer.Option("proposed", "--scheme", help="Offline scheme: proposed or cql"),
    dataset_path: str = typer.Option(..., "--dataset", help="Experience store to learn from"),
    iterations: Optional[int] = typer.Option(None, "--iterations", "-i", help="Training iterations"),
    eval_every: int = typer.Option(1, "--eval-every", help="Evaluate every N iterations"),
    checkpoints: bool = typer.Option(False, "--checkpoints", help="Save periodic checkpoints"),
    force: bool = typer.Option(False, "--force", help="Ignore configuration fingerprint mismatches"),
    format_type: str = typer.Option("table", "--format", help="Output format: table, plain, or csv"),
) -> None:
    """Train an offline scheme and write its metric log."""
    if scheme not in SCHEMES:
        fail(f"scheme must be one of {', '.join(SCHEMES)}")
    try:
        cfg = current_config()
        if iterations is not None:
            cfg = require_valid(replace(cfg, iterations=iterations))
        store = harness.require_store(dataset_path, cfg, force)
        hook = harness.make_eval_hook(cfg, cfg.eval_realizations, cfg.rng_seed)
        checkpoint_dir = out_path("checkpoints") if checkpoints else None
        result = train_offline(
            store.records, cfg, scheme, hook, cfg.rng_seed, eval_every=eval_every, checkpoint_dir=checkpoint_dir
        )
        stem = os.path.splitext(os.path.basename(dataset_path))[0]
        csv_path = out_path(f"train_{scheme}_{stem}.csv")
        harness.write_csv(csv_path, cfg, harness.METRIC_COLUMNS, harness.metric_rows(result.metrics))
        final_path = out_path(f"{scheme}_{stem}.ckpt")
        save_checkpoint(final_path, offline_checkpoint_nets(result.trainer, result.behavior), scheme)
    except (AosControlError, ValueError) as exc:
        fail(str(exc))
    ConsoleUI(format_type).display_metrics(result.metrics, every=max(1, eval_every))
    audit = result.audit
    if audit is not None:
        if audit.audited == 0:
            console.print("[yellow]Margin audit: no sampled state has an unsupported action[/yellow]")
        else:
            colour = "green" if audit.passed() else "yellow"
            console.print(
                f"[{colour}]Margin audit: {audit.satisfied_fraction:.1%} of {audit.audited} states[/{colour}]"
            )
    console.print(f"[green]Metrics written to {csv_path}; final checkpoint {final_path}[/green]")


@app.command(name="eval")
def evaluate(
    policy: str = typer.Option("random", "--policy", "-p", help="Policy: random or a2c"),
    checkpoint: Optional[str] = typer.Option(None, "--checkpoint", help="Evaluate a saved agent checkpoint"),
    realizations: Optional[int] = typer.Option(None, "--realizations", "-n", help="Slots to average over"),
    trajectory: Optional[str] = typer.Option(None, "--trajectory", help="Write per-slot CSV here"),
    format_type: str = typer.Option("table", "--format", help="Output format: table, plain, or csv"),
) -> None:
    """Evaluate a policy by Monte Carlo simulation."""
    try:
        cfg = current_config()
        if checkpoint is not None:
            chosen: Policy = harness.load_policy(checkpoint, cfg)
            name = os.path.basename(checkpoint)
        elif policy == "random":
            chosen, name = RandomPolicy(cfg.num_relays), "random"
        elif policy == "a2c":
            chosen, name = harness.load_a2c_policy(out_path(harness.A2C_CHECKPOINT), cfg), "a2c"
        else:
            fail("policy must be 'random' or 'a2c' (or pass --checkpoint)")
        count = realizations or cfg.eval_realizations
        seed = derive_int(cfg.rng_seed, "harness.eval")
        if trajectory is not None:
            with open(trajectory, "w", encoding="utf-8", newline="") as handle:
                result = evaluate_policy(lambda: NcsEnv(cfg), chosen, count, seed, trajectory=handle)
        else:
            result = evaluate_policy(lambda: NcsEnv(cfg), chosen, count, seed)
    except (AosControlError, ValueError) as exc:
        fail(str(exc))
    results: Dict[str, EvaluationResult] = {name: result}
    ConsoleUI(format_type).display_evaluation(results)


@app.command()
def convergence(
    force: bool = typer.Option(False, "--force", help="Ignore configuration fingerprint mismatches"),
    spec_path: Optional[str] = typer.Option(None, "--spec", help="Experiment file (seeds and overrides)"),
) -> None:
    """Convergence of the proposed scheme on expert and random data."""
    try:
        cfg = current_config()
        spec = harness.load_spec(spec_path, cfg) if spec_path else harness.ExperimentSpec(base=cfg)
        result = harness.run_convergence(spec, state.out_dir, state.out_dir, force=force)
    except (AosControlError, ValueError) as exc:
        fail(str(exc))
    ui = ConsoleUI()
    for name, curve in result.curves.items():
        console.print(f"[bold]{name}[/bold] converged by iteration {harness.iterations_to_converge(curve)}")
    ui.display_references(result.references)
    for path in result.files:
        console.print(f"[green]Wrote {path}[/green]")


@app.command()
def sweep(
    spec_path: str = typer.Option(..., "--spec", help="Experiment file"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Worker processes"),
    format_type: str = typer.Option("table", "--format", help="Output format: table, plain, or csv"),
) -> None:
    """Run a parameter sweep over (value, seed) cells."""
    try:
        spec = harness.load_spec(spec_path, current_config())
        if workers is not None:
            spec = replace(spec, workers=workers)
        rows = harness.run_sweep(spec, state.out_dir)
    except (AosControlError, ValueError) as exc:
        fail(str(exc))
    ConsoleUI(format_type).display_sweep(rows, spec.sweep_variable)


@app.command()
def version() -> None:
    """Show version information."""
    console.print(f"[bold]AoSControl[/bold] version {__version__}")
    console.print(f"Configuration file: {_target_config_file()}")
    console.print(f"Output directory: {state.out_dir}")


def main() -> None:
    """Entry point for the application."""
    app()


if __name__ == "__main__":
    main()
