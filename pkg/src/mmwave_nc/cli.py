"""mmwave-nc command line: bound tables, simulation campaigns and singularity validation.

Exit codes: 0 success, 2 configuration error, 3 undefined bound cells requested
without --allow-undefined.
"""

import math
from pathlib import Path
from typing import Callable, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from mmwave_nc import __version__
from mmwave_nc.campaigns import (
    CampaignResult,
    run_bounds_figures,
    run_downlink_campaign,
    run_phi_validation,
    run_uplink_campaign,
)
from mmwave_nc.errors import ConfigError, InfeasibleBoundError
from mmwave_nc.gf import get_field
from mmwave_nc.logging_config import get_logger, setup_logging
from mmwave_nc.models import ExperimentConfig
from mmwave_nc.shared import Settings, get_settings
from mmwave_nc.types import LogLevel

logger = get_logger(__name__)

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

app = typer.Typer(
    name="mmwave-nc",
    help="Network coding against forwarding for multi-relay mmWave access: bounds and Monte-Carlo campaigns.",
    no_args_is_help=True,
    add_completion=False,
)
console = Console()

ConfigOption = typer.Option(None, "--config", "-c", help="JSON experiment config (defaults when omitted)")
SeedOption = typer.Option(None, "--seed", min=0, max=2**64 - 1, help="Base seed, overrides the config")
OutOption = typer.Option(None, "--out", "-o", help="Output directory, overrides the config")
ReplicationsOption = typer.Option(None, "--replications", "-r", min=1, help="Replications, overrides the config")


@app.callback()
def main(
    log_level: Optional[LogLevel] = typer.Option(None, "--log-level", case_sensitive=False, help="Overrides LOG_LEVEL"),
):
    settings = get_settings()
    setup_logging(log_level or settings.log_level, settings.log_format)


def load_config(
    config_path: Optional[Path], seed: Optional[int], out: Optional[Path], replications: Optional[int]
) -> ExperimentConfig:
    """Config file (or defaults) with CLI overrides applied; exits with code 2 on any config problem.

    Without a config file the output directory comes from MMWAVE_NC_OUTPUT_DIR.
    """
    if out is None and config_path is None:
        out = Path(get_settings().output_dir)
    try:
        config = ExperimentConfig.load(config_path) if config_path else ExperimentConfig()
        return config.with_overrides(
            seed=seed,
            output_dir=str(out) if out else None,
            replications=replications,
        )
    except (ConfigError, ValidationError) as e:
        console.print(f"[red]Config error:[/red] {e}")
        raise typer.Exit(EXIT_CONFIG)


def _cell(value) -> str:
    if value is None or value == "":
        return "-"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.4g}"
    return str(value)


def show_result(result: CampaignResult, title: str) -> None:
    if result.summary_rows:
        table = Table(title=title)
        for header in result.summary_headers:
            table.add_column(header, justify="right")
        for row in result.summary_rows:
            table.add_row(*[_cell(v) for v in row])
        console.print(table)
    for path in result.files:
        console.print(f"[green]wrote[/green] {path}")


def _run(
    runner: Callable[[ExperimentConfig, Path, Settings], CampaignResult], config: ExperimentConfig, title: str
) -> None:
    settings = get_settings()
    out = Path(config.output_dir)
    logger.info(f"Running {title} with seed {config.seed} into {out}")
    show_result(runner(config, out, settings), title)


@app.command()
def bounds(
    config_path: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    replications: Optional[int] = ReplicationsOption,
    allow_undefined: bool = typer.Option(
        False, "--allow-undefined", help="Write backhaul cells outside the feasible region as 'undefined'"
    ),
):
    """Downlink bound curves against N and symmetric backhaul bounds against p."""
    config = load_config(config_path, seed, out, replications)
    try:
        result = run_bounds_figures(config, config.output_dir, allow_undefined=allow_undefined, settings=get_settings())
    except InfeasibleBoundError as e:
        console.print(f"[yellow]{e}[/yellow]")
        raise typer.Exit(EXIT_INFEASIBLE)
    show_result(result, "Backhaul bound feasibility")


@app.command()
def downlink(
    config_path: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    replications: Optional[int] = ReplicationsOption,
):
    """Per-device downlink efficiency and delay for every relay spacing."""
    config = load_config(config_path, seed, out, replications)
    _run(run_downlink_campaign, config, "Downlink campaign")


@app.command()
def uplink(
    config_path: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    replications: Optional[int] = ReplicationsOption,
):
    """Per-group uplink backhaul efficiency for every relay spacing and code length."""
    config = load_config(config_path, seed, out, replications)
    _run(run_uplink_campaign, config, "Uplink campaign")


@app.command()
def phi(
    config_path: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    replications: Optional[int] = ReplicationsOption,
):
    """Empirical singularity probability against its analytic bound."""
    config = load_config(config_path, seed, out, replications)
    _run(run_phi_validation, config, "Singularity validation")


@app.command()
def init(
    path: Path = typer.Argument(Path("config.json"), help="Where to write the config template"),
    env_file: bool = typer.Option(True, "--env/--no-env", help="Also write a commented .env template"),
    force: bool = typer.Option(False, "--force", help="Overwrite an existing config file"),
):
    """Write the full-default config template (and a .env template)."""
    if path.exists() and not force:
        console.print(f"[yellow]{path} exists, use --force to overwrite[/yellow]")
        raise typer.Exit(EXIT_CONFIG)
    ExperimentConfig().dump_template(path)
    console.print(f"[green]wrote[/green] {path}")
    if env_file and Settings.ensure_env_file():
        console.print("[green]wrote[/green] .env")


@app.command()
def info(config_path: Optional[Path] = ConfigOption):
    """Show the field, the process settings and the main defaults."""
    config = load_config(config_path, None, None, None)
    settings = get_settings()
    field = get_field(config.field_size).describe()

    table = Table(title=f"mmwave-nc {__version__}", show_header=False)
    table.add_column("setting")
    table.add_column("value")
    table.add_row("field", f"GF({field['q']}), {field['polynomial_str']}")
    table.add_row("relays", f"{config.scenario.n_relays}, spacings {config.relay_spacings} m")
    table.add_row("devices", str(config.scenario.n_devices))
    table.add_row("k / z", f"{config.timespan.k} / {config.uplink_code_lengths}")
    table.add_row("spans", str(config.timespan.spans))
    table.add_row("erasure threshold", str(config.channel.erasure_threshold))
    table.add_row("grouping", config.grouping.value)
    table.add_row("uplink NC mode", config.uplink_nc_mode.value)
    table.add_row("seed", str(config.seed))
    table.add_row("config sha256", config.config_hash())
    table.add_row("workers", str(settings.workers))
    table.add_row("cache", settings.cache_dir or "disabled")
    console.print(table)


if __name__ == "__main__":
    app()
