"""Command-line entry point: run, sweep, batch, diag and presets."""

import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Iterator, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeRemainingColumn
from rich.table import Table

from stratabc.config import get_settings
from stratabc.exceptions import ConfigError, StartupError, StratABCError
from stratabc.inference.diagnostics import diagnose_chain
from stratabc.presets import preset_names, preset_text
from stratabc.schemas.artifacts import ChainDiagnostics
from stratabc.services.experiment import load_config, read_chain, resolve_output_dir, run_batch, run_experiment
from stratabc.services.plot_data import emit_plot_data
from stratabc.services.sweep import run_sweep

app = typer.Typer(help="Resampling and stratified ABC-MCMC experiments.", no_args_is_help=True)
console = Console()

EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_STARTUP = 3


def _setup_logging(verbose: bool) -> None:
    level = "DEBUG" if verbose else get_settings().log_level
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
        force=True,
    )


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug messages"),
    output_root: Optional[Path] = typer.Option(
        None, "--output-root", envvar="STRATABC_OUTPUT_ROOT", help="Directory relative output dirs resolve under"
    ),
) -> None:
    if output_root is not None:
        # worker processes of a batch read the setting from the environment
        os.environ["STRATABC_OUTPUT_ROOT"] = str(output_root)
        get_settings.cache_clear()
    _setup_logging(verbose)


@contextmanager
def _handle_errors() -> Iterator[None]:
    try:
        yield
    except ConfigError as e:
        console.print("[red]Invalid configuration:[/red]")
        for message in e.errors:
            console.print(f"  • {message}")
        raise typer.Exit(EXIT_CONFIG)
    except StartupError as e:
        console.print(f"[red]Sampler startup failed:[/red] {e}")
        raise typer.Exit(EXIT_STARTUP)
    except StratABCError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_OTHER)


@contextmanager
def _progress(enabled: bool) -> Iterator[Optional[Callable[[str, int, int], None]]]:
    if not enabled:
        yield None
        return
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
        TimeRemainingColumn(),
        console=console,
        transient=True,
    ) as progress:
        tasks: dict[str, int] = {}

        def update(name: str, done: int, total: int) -> None:
            if name not in tasks:
                tasks[name] = progress.add_task(name, total=total)
            progress.update(tasks[name], completed=done)

        yield update


def _print_diagnostics(title: str, diag: ChainDiagnostics) -> None:
    table = Table(title=title)
    table.add_column("parameter")
    table.add_column("mean", justify="right")
    table.add_column("95% interval", justify="right")
    table.add_column("IAT", justify="right")
    table.add_column("ESS", justify="right")
    by_name = {p.name: p for p in diag.posterior}
    for j, name in enumerate(diag.parameter_names):
        summary = by_name.get(name)
        table.add_row(
            name,
            f"{summary.mean:.4g}" if summary else "-",
            f"[{summary.lower:.4g}, {summary.upper:.4g}]" if summary else "-",
            f"{diag.iat[j]:.1f}",
            f"{diag.ess[j]:.1f}",
        )
    console.print(table)
    if diag.evaluated_acceptance_rate is not None:
        console.print(f"acceptance among evaluated proposals {diag.evaluated_acceptance_rate:.3f}")
    console.print(f"acceptance rate {diag.acceptance_rate:.3f}, worst IAT {diag.worst_iat:.1f}, worst ESS {diag.worst_ess:.1f}")


@app.command()
def run(
    config: str = typer.Argument(..., help="Config file (TOML or JSON) or preset name"),
    plot_data: bool = typer.Option(True, help="Also write density tables for plotting"),
    progress: bool = typer.Option(True, help="Show progress bars"),
) -> None:
    """Run every stage of an experiment and write its artifacts."""
    with _handle_errors():
        cfg = load_config(config)
        with _progress(progress) as update:
            artifacts = run_experiment(cfg, progress=update)
        for stage in artifacts.manifest.stages:
            if stage.diagnostics is not None:
                _print_diagnostics(f"{stage.name} ({stage.sampler})", stage.diagnostics)
            elif stage.smc is not None:
                console.print(
                    f"{stage.name} (smc): {stage.smc.iterations} iterations, final δ = {stage.smc.final_delta:.4g}"
                )
        if plot_data:
            emit_plot_data(artifacts.output_dir)
        console.print(f"[green]✓[/green] artifacts in {artifacts.output_dir}")


@app.command()
def sweep(
    config: str = typer.Argument(..., help="Config file or preset name with a [sweep] section"),
    progress: bool = typer.Option(True, help="Show progress bars"),
) -> None:
    """Likelihood curves over a grid of one parameter coordinate."""
    with _handle_errors():
        cfg = load_config(config)
        out = resolve_output_dir(cfg)
        with _progress(progress) as update:
            written = run_sweep(cfg, out, progress=update)
        for path in written:
            console.print(f"[green]✓[/green] {path}")


@app.command()
def batch(
    config: str = typer.Argument(..., help="Config file or preset name"),
    replicates: Optional[int] = typer.Option(None, "--replicates", "-k", min=1, help="Number of replicates"),
    workers: Optional[int] = typer.Option(None, "--workers", min=1, help="Worker processes"),
) -> None:
    """Independent replicates of an experiment plus a cross-replicate summary."""
    with _handle_errors():
        cfg = load_config(config)
        out = run_batch(cfg, replicates=replicates, workers=workers)
        console.print(f"[green]✓[/green] batch summary in {out / 'batch_summary.json'}")


@app.command()
def diag(
    chain_file: Path = typer.Argument(..., help="chain_<stage>.tsv written by run"),
    burn_in: int = typer.Option(0, "--burn-in", min=0, help="Leading draws to discard"),
) -> None:
    """Diagnostics of a chain file: IAT, ESS and posterior summaries."""
    with _handle_errors():
        chain = read_chain(chain_file, burn_in)
        if burn_in >= len(chain):
            raise ConfigError([f"burn-in {burn_in} leaves no draws of {len(chain)}"])
        _print_diagnostics(chain_file.name, diagnose_chain(chain))


@app.command()
def presets(
    name: Optional[str] = typer.Argument(None, help="Print this preset instead of listing them"),
) -> None:
    """List the bundled presets, or print one."""
    with _handle_errors():
        if name is None:
            for preset in preset_names():
                console.print(preset)
            return
        console.print(preset_text(name), markup=False, highlight=False)


if __name__ == "__main__":
    app()
