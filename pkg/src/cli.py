"""flatcalc CLI - configuration-driven experiment runner.

Usage:
    flatcalc run configs/hardy.ini
    flatcalc run configs/resolvent-scan.ini --threads 4 --seed 7
    flatcalc list
    flatcalc schema hardy
    flatcalc doctor
"""

import asyncio
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any

import click
from pydantic import ValidationError
from rich.console import Console
from rich.json import JSON
from rich.logging import RichHandler
from rich.panel import Panel

from src import __version__
from src.commands import EXPERIMENTS, list_experiments
from src.commands.common import ExperimentOutput
from src.core.config import ExperimentConfig, load_config
from src.core.errors import ErrorCode, FlatcalcError
from src.core.output import write_manifest, write_table
from src.core.result import CommandResult, error, error_from_exception
from src.core.types import ExperimentName

console = Console()
logger = logging.getLogger("flatcalc")

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def configure_logging(level: str) -> None:
    """Route all library logging through one rich handler on stderr."""
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)
    logging.basicConfig(level=level.upper(), format="%(message)s", handlers=[handler], force=True)


def print_result(result: CommandResult) -> None:
    """Print a CommandResult with rich formatting; tables are summarized."""
    result_dict = result.model_dump(exclude_none=True, mode="json")
    data = result_dict.get("data")
    if data and "tables" in data:
        data["tables"] = {table["name"]: len(table["rows"]) for table in data["tables"]}

    if result.success:
        title = "✓ Success"
        border_style = "green"
    else:
        title = "✗ Error"
        border_style = "red"

    panel = Panel(
        JSON.from_data(result_dict),
        title=title,
        border_style=border_style,
    )
    console.print(panel)


def write_outputs(
    config: ExperimentConfig, output: ExperimentOutput, wall_time: float
) -> Path:
    """Write every table plus manifest.json into the run's output directory."""
    directory = Path(config.run.output_dir)
    files = [write_table(directory, table).name for table in output.tables]
    manifest: dict[str, Any] = {
        "experiment": config.experiment.value,
        "version": __version__,
        "seed": config.run.seed,
        "threads": config.run.threads,
        "wall_time_seconds": round(wall_time, 3),
        "config": config.model_dump(mode="json"),
        "files": files,
        "summary": output.model_dump(mode="json")["summary"],
    }
    write_manifest(directory, manifest)
    return directory


async def run_experiment_config(config: ExperimentConfig) -> CommandResult:
    """Build the experiment's input from a validated config and run it."""
    entry = EXPERIMENTS[config.experiment]
    try:
        input_data = entry.input_model.from_config(config)
    except ValidationError as e:
        return error(
            code=ErrorCode.VALIDATION_ERROR.value,
            message=str(e),
            suggestion=f"Check the schema with 'flatcalc schema {config.experiment.value}'",
        )
    return await entry.command(input_data)


@click.group(invoke_without_command=True)
@click.option("--verbose", "-v", is_flag=True, help="Log solver traces (DEBUG level)")
@click.option(
    "--log-level",
    envvar="FLATCALC_LOG_LEVEL",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default="WARNING",
    show_default=True,
    help="Log level (also read from FLATCALC_LOG_LEVEL)",
)
@click.version_option(__version__, prog_name="flatcalc")
@click.pass_context
def main(ctx: click.Context, verbose: bool, log_level: str) -> None:
    """flatcalc - boundary-flattening pullbacks and functional calculus.

    Run an experiment from a configuration file:

        flatcalc run configs/hardy.ini

    List the experiments and the sections they need:

        flatcalc list
    """
    configure_logging("DEBUG" if verbose else log_level)
    if ctx.invoked_subcommand is not None:
        return

    click.echo(ctx.get_help())
    click.echo("\nExperiments:")
    for name in ExperimentName:
        click.echo(f"  {name.value}")


@main.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--output-dir", type=click.Path(file_okay=False), help="Override [run] output_dir")
@click.option("--threads", type=int, help="Worker threads for independent work units")
@click.option("--seed", type=int, help="Override the [run] seed")
def run(config_path: str, output_dir: str | None, threads: int | None, seed: int | None) -> None:
    """Run the experiment described by CONFIG_PATH.

    Exits 0 on success, 2 on validation failures, 3 on numerical failures.
    """
    try:
        config = load_config(config_path).with_overrides(
            output_dir=output_dir, threads=threads, seed=seed
        )
    except FlatcalcError as e:
        result = error_from_exception(e)
        print_result(result)
        sys.exit(result.exit_code)

    logger.info(
        "Running %s with seed %d on %d threads",
        config.experiment.value,
        config.run.seed,
        config.run.threads,
    )
    started = time.perf_counter()
    result = asyncio.run(run_experiment_config(config))
    wall_time = time.perf_counter() - started

    if result.data is not None:
        directory = write_outputs(config, result.data, wall_time)
        logger.info("Wrote results to %s in %.2fs", directory, wall_time)
    print_result(result)
    sys.exit(result.exit_code)


@main.command(name="list")
def list_command() -> None:
    """List experiments, their required fields and what they probe."""
    click.echo(list_experiments(), nl=False)


@main.command()
@click.argument("experiment", type=click.Choice([name.value for name in ExperimentName]))
def schema(experiment: str) -> None:
    """Show the input schema for an experiment."""
    entry = EXPERIMENTS[ExperimentName(experiment)]
    schema_dict = entry.input_model.model_json_schema()
    console.print(Panel(
        JSON(json.dumps(schema_dict)),
        title=f"Schema: {experiment}",
        border_style="blue",
    ))


def _superlu_complex_check() -> tuple[bool, str]:
    import numpy as np
    import scipy.sparse as sp
    from scipy.sparse.linalg import splu

    matrix = sp.csc_matrix(np.array([[2.0 + 1.0j, 1.0], [1.0, 3.0 - 1.0j]]))
    rhs = np.array([1.0 + 0.0j, 1.0j])
    solution = splu(matrix).solve(rhs)
    residual = float(np.max(np.abs(matrix @ solution - rhs)))
    return residual < 1e-12, f"residual {residual:.1e}"


@main.command()
def doctor() -> None:
    """Check system health and dependencies."""
    console.print("\n[bold]flatcalc System Check[/bold]\n")

    checks = []

    py_version = f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}"
    py_ok = sys.version_info >= (3, 11)
    checks.append(("Python ≥3.11", py_ok, py_version))

    packages = [
        ("numpy", "NumPy"),
        ("scipy", "SciPy"),
        ("pydantic", "Pydantic"),
        ("click", "Click"),
        ("rich", "Rich"),
    ]

    for pkg_name, display_name in packages:
        try:
            pkg = __import__(pkg_name)
            version = getattr(pkg, "__version__", "unknown")
            checks.append((display_name, True, version))
        except ImportError:
            checks.append((display_name, False, "not installed"))

    console.print("[bold]Core Dependencies[/bold]")
    for name, ok, version in checks:
        status = "[green]✓[/green]" if ok else "[red]✗[/red]"
        console.print(f"  {status} {name}: {version}")

    console.print("\n[bold]Solvers[/bold]")
    try:
        ok, detail = _superlu_complex_check()
    except ImportError:
        ok, detail = False, "scipy not installed"
    status = "[green]✓[/green]" if ok else "[red]✗[/red]"
    console.print(f"  {status} SuperLU complex factorization: {detail}")

    console.print()


if __name__ == "__main__":
    main()
