"""Console UI for AoSControl."""

import csv
import sys
from typing import List, Mapping, Optional, Sequence

from rich.console import Console
from rich.table import Table
from tabulate import tabulate

from ..core.dataset import ExperienceStore
from ..core.env import EvaluationResult
from ..core.harness import CalibrationReport, ReferenceLine, SweepRow, TrendCheck, format_value, sweep_trends
from ..core.offline import IterationMetrics

OUTPUT_FORMATS = ("table", "plain", "csv")


def _fmt(value: float, digits: int = 4) -> str:
    if value != value:  # NaN
        return "-"
    return f"{value:.{digits}f}"


class ConsoleUI:
    """Console UI for displaying simulation and training results."""

    def __init__(self, format_type: str = "table") -> None:
        """Initialize the console UI."""
        if format_type not in OUTPUT_FORMATS:
            raise ValueError(f"output format must be one of {', '.join(OUTPUT_FORMATS)}")
        self.console = Console()
        self.format_type = format_type

    def _emit(self, title: str, headers: Sequence[str], rows: List[List[str]]) -> None:
        if self.format_type == "csv":
            writer = csv.writer(sys.stdout, lineterminator="\n")
            writer.writerow(headers)
            writer.writerows(rows)
        elif self.format_type == "plain":
            print(tabulate(rows, headers=list(headers), tablefmt="simple"))
        else:
            table = Table(title=title)
            for i, header in enumerate(headers):
                table.add_column(header, justify="left" if i == 0 else "right", style="cyan" if i == 0 else None)
            for row in rows:
                table.add_row(*row)
            self.console.print(table)

    def display_evaluation(self, results: Mapping[str, EvaluationResult]) -> None:
        """Display per-policy averages."""
        if not results:
            self.console.print("[yellow]No policies were evaluated.[/yellow]")
            return
        headers = ["Policy", "Avg Reward", "Avg AoS (s)", "Avg Energy (J)", "Slots"]
        rows = [
            [name, _fmt(r.avg_reward), _fmt(r.avg_aos_s), _fmt(r.avg_energy_j), str(r.num_realizations)]
            for name, r in results.items()
        ]
        self._emit("Policy Evaluation", headers, rows)

    def display_calibration(self, report: CalibrationReport) -> None:
        """Display delivery probabilities per IRS size."""
        if self.format_type == "table":
            self.console.print(
                f"[bold]Hop-1 requirement:[/bold] {report.spectral_efficiency:.2f} bits/s/Hz, "
                f"SNR threshold {report.snr_threshold:.1f}, gain threshold {report.gain_threshold:.3e}"
            )
        headers = ["IRS Elements", "Single Hop", "Two Hop", "Best Relay", "Samples"]
        rows = [
            [
                str(e.num_irs_elements),
                _fmt(e.single_hop, 3),
                _fmt(e.two_hop, 3),
                _fmt(e.best_relay, 3),
                str(e.num_samples),
            ]
            for e in report.estimates
        ]
        self._emit("Link Calibration", headers, rows)
        if self.format_type == "table":
            low, high = report.band
            if report.in_band:
                self.console.print(f"[green]Two-hop success within [{low}, {high}][/green]")
            else:
                self.console.print(f"[red]Two-hop success outside [{low}, {high}][/red]")

    def display_metrics(self, metrics: Sequence[IterationMetrics], every: int = 1) -> None:
        """Display a training curve, one row per ``every`` iterations."""
        if not metrics:
            self.console.print("[yellow]No training iterations recorded.[/yellow]")
            return
        headers = ["Iteration", "Avg Reward", "Avg AoS (s)", "Avg Energy (J)", "TD Loss", "Penalty"]
        shown = [m for m in metrics if m.iteration % every == 0 or m is metrics[-1]]
        rows = [
            [
                str(m.iteration),
                _fmt(m.avg_reward),
                _fmt(m.avg_aos_s),
                _fmt(m.avg_energy_j),
                _fmt(m.td_loss, 6),
                _fmt(m.penalty_loss, 6),
            ]
            for m in shown
        ]
        self._emit("Offline Training", headers, rows)

    def display_references(self, references: Mapping[str, ReferenceLine]) -> None:
        headers = ["Scheme", "Avg Reward", "Avg AoS (s)", "Avg Energy (J)", "95% CI"]
        rows = [
            [r.scheme, _fmt(r.avg_reward), _fmt(r.avg_aos_s), _fmt(r.avg_energy_j), _fmt(r.ci_half_width)]
            for r in references.values()
        ]
        self._emit("Reference Lines", headers, rows)

    def display_sweep(self, rows: Sequence[SweepRow], variable: str) -> None:
        """Display aggregated sweep results."""
        if not rows:
            self.console.print("[yellow]Sweep produced no results.[/yellow]")
            return
        headers = [variable, "xi", "Scheme", "Avg AoS (s)", "Avg Energy (J)", "Avg Reward", "95% CI", "Seeds"]
        table_rows = [
            [
                format_value(r.value),
                "-" if r.xi is None else format_value(r.xi),
                r.scheme,
                _fmt(r.avg_aos_s),
                _fmt(r.avg_energy_j),
                _fmt(r.avg_reward),
                _fmt(r.ci_half_width),
                str(r.num_seeds),
            ]
            for r in rows
        ]
        self._emit(f"Sweep over {variable}", headers, table_rows)
        if self.format_type != "csv":
            self.display_trends(sweep_trends(rows, variable))

    def display_trends(self, checks: Sequence[TrendCheck]) -> None:
        """Display which qualitative sweep claims hold."""
        if not checks:
            return
        headers = ["Claim", "Scheme", "xi", "Holds"]
        rows = [
            [c.claim, c.scheme, "-" if c.xi is None else format_value(c.xi), "yes" if c.holds else "no"]
            for c in checks
        ]
        self._emit("Sweep Trends", headers, rows)

    def display_store(self, store: ExperienceStore, path: Optional[str] = None) -> None:
        """Display a dataset header."""
        header = store.header
        headers = ["Source", "Records", "Relays", "Version", "Fingerprint"]
        rows = [[header.source, str(header.count), str(header.num_relays), str(header.version), header.fingerprint[:16]]]
        self._emit(path or "Experience Store", headers, rows)
