"""
Main CLI application using Typer
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .config import load_config
from .errors import QKDError, VerificationError
from .evaluation import build_suite
from .loading import progress_bar, show_step
from .output import POISSON_COLUMNS, VERIFY_COLUMNS, OutputFormat, Row, render, simulate_header, sweep_header, write_output
from .protocol import MAX_SEED
from .runner import poisson_rows, simulate_rows, sweep_rows

app = typer.Typer(
    name="muqkd",
    help="Monte Carlo simulator for multi-user QKD network cells with a central server",
    add_completion=False,
)

console = Console(stderr=True)

EXIT_INVALID = 1
EXIT_VERIFY_FAILED = 2


def version_callback(value: bool):
    """Display version information"""
    if value:
        console.print(f"[bold blue]MUQKD CLI[/bold blue] version [green]{__version__}[/green]")
        raise typer.Exit()


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-V", help="Log debug output to stderr"),
):
    """
    MUQKD - simulate three-party QKD sessions under loss and attack
    """
    _configure_logging(verbose)


def _fail(message: str, code: int = EXIT_INVALID):
    console.print(f"[red]Error: {message}[/red]")
    raise typer.Exit(code)


def _split(values: str) -> List[str]:
    return [v.strip() for v in values.split(",") if v.strip()]


def _emit(rows: List[Row], header: List[str], fmt: OutputFormat, out: Optional[Path]) -> None:
    try:
        write_output(render(rows, header, fmt), out)
    except OSError as e:
        _fail(f"cannot write {out}: {e.strerror or e}")


def _print_summary(rows: List[Row]) -> None:
    table = Table(title="Session Summary")
    table.add_column("Trial", style="cyan")
    table.add_column("Key", justify="right")
    table.add_column("QBER Z", justify="right")
    table.add_column("QBER X", justify="right")
    table.add_column("QBER up", justify="right")
    table.add_column("Eve info", justify="right")
    table.add_column("Alarm", style="red")

    def rate(value) -> str:
        return "-" if value is None else f"{value:.4f}"

    for row in rows:
        table.add_row(
            str(row["trial"]),
            str(row["key_length"]),
            rate(row["qber_z"]),
            rate(row["qber_x"]),
            rate(row["qber_upstream"]),
            rate(row["eve_info"]),
            "yes" if row["multi_photon_alarm"] else "",
        )
    console.print(table)


@app.command()
def simulate(
    config: Path = typer.Option(..., "--config", "-c", help="Experiment configuration file"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the configured seed"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output file (default: stdout)"),
    fmt: OutputFormat = typer.Option(OutputFormat.CSV, "--format", "-f", help="Output format"),
    workers: int = typer.Option(1, "--workers", "-w", min=1, help="Processes for independent trials"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="No progress bar or summary"),
):
    """
    Run one configuration and emit SessionMetrics per trial.
    """
    try:
        experiment = load_config(config, {"seed": seed} if seed is not None else None)
        experiment = replace(experiment, output_path=out)
        with progress_bar(experiment.trials, "Trials", enabled=not quiet) as update:
            rows = simulate_rows(experiment, workers=workers, progress=update)
    except QKDError as e:
        _fail(str(e))

    _emit(rows, simulate_header(), fmt, experiment.output_path)
    if not quiet:
        _print_summary(rows)
        if out is not None:
            show_step(f"Wrote {len(rows)} row(s) to {out}", "success")


@app.command()
def sweep(
    config: Path = typer.Option(..., "--config", "-c", help="Base experiment configuration file"),
    key: str = typer.Option(..., "--key", "-k", help="Configuration key to vary"),
    values: str = typer.Option(..., "--values", help="Comma-separated values for the key"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the configured seed"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output file (default: stdout)"),
    fmt: OutputFormat = typer.Option(OutputFormat.CSV, "--format", "-f", help="Output format"),
    workers: int = typer.Option(1, "--workers", "-w", min=1, help="Processes for independent trials"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="No progress bar"),
):
    """
    Vary one key over a list of values; one row per value and trial.
    """
    points = _split(values)
    if not points:
        _fail("--values needs at least one value")
    try:
        text = config.read_text(encoding="utf-8")
    except OSError as e:
        _fail(f"cannot read {config}: {e.strerror or e}")

    try:
        with progress_bar(len(points), f"Sweep {key}", enabled=not quiet) as update:
            rows = sweep_rows(text, key, points, seed=seed, workers=workers, progress=update)
    except QKDError as e:
        _fail(str(e))

    _emit(rows, sweep_header(), fmt, out)
    rejected = sum(1 for row in rows if row.get("error"))
    if rejected and not quiet:
        show_step(f"{rejected} value(s) rejected; see the error column", "warning")


@app.command("poisson-table")
def poisson_table(
    mu: str = typer.Option(..., "--mu", "-m", help="Comma-separated mean photon numbers"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output file (default: stdout)"),
    fmt: OutputFormat = typer.Option(OutputFormat.CSV, "--format", "-f", help="Output format"),
):
    """
    Tabulate photon-number statistics of a faint-laser source.
    """
    try:
        mus = [float(v) for v in _split(mu)]
    except ValueError:
        _fail(f"--mu expects numbers, got {mu!r}")
    if not mus:
        _fail("--mu needs at least one value")
    try:
        rows = poisson_rows(mus)
    except QKDError as e:
        _fail(str(e))
    _emit(rows, POISSON_COLUMNS, fmt, out)


@app.command()
def verify(
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Seed every Monte Carlo oracle with this value"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output file (default: stdout)"),
    fmt: OutputFormat = typer.Option(OutputFormat.CSV, "--format", "-f", help="Output format"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only print the report"),
):
    """
    Run the oracle suite, emit one row per oracle and report pass/fail.
    """
    if seed is not None and not 0 <= seed <= MAX_SEED:
        _fail(f"seed must be an integer in [0, 2^64), got {seed}")
    suite = build_suite(seed)
    suite.run(quiet=quiet)
    suite.print_report()
    _emit(suite.rows(), VERIFY_COLUMNS, fmt, out)
    try:
        suite.raise_on_failure()
    except VerificationError as e:
        _fail(str(e), EXIT_VERIFY_FAILED)
    show_step("All oracles passed", "success")


def run():
    """Entry point for the CLI"""
    app()


if __name__ == "__main__":
    run()
