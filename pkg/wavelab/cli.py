from __future__ import annotations

import logging
import sys
from typing import Any, Callable

import click

from . import __version__
from ._config import ConfigError, RunConfig
from ._errors import WavelabError
from .runs import (
    EXIT_CONFIG,
    RunResult,
    run_channels,
    run_evolve,
    run_kernel,
    run_norms,
    run_selfsimilar,
    run_stationary,
)
from .telemetry import logger as telemetry_logger

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)

logger = logging.getLogger("wavelab.cli")

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


def _section(**values: Any) -> dict[str, Any] | None:
    present = {key: value for key, value in values.items() if value is not None}

    return present or None


def _execute(ctx: click.Context, runner: Callable[[RunConfig], RunResult], **sections: Any) -> None:
    params = ctx.obj

    try:
        conf = RunConfig.load(params["config"], **params["overrides"])
        conf = conf.merge(RunConfig.from_cli(sections))
        conf.validate()
    except ConfigError as error:
        logger.error("Invalid configuration: %s", error)
        sys.exit(EXIT_CONFIG)

    level = getattr(logging, (conf.log_level or "INFO").upper())
    logging.getLogger().setLevel(level)
    telemetry_logger.attach(level=logging.INFO)

    try:
        result = runner(conf)
    except (WavelabError, ValueError) as error:
        logger.error("Run failed: %s", error)
        sys.exit(EXIT_CONFIG)
    finally:
        telemetry_logger.detach()

    for path in result.files:
        logger.debug("wrote %s", path)

    logger.info("Wrote %d files under %s", len(result.files), conf.output_prefix().parent)

    sys.exit(result.status)


@click.group(
    context_settings={
        "help_option_names": ["-h", "--help"],
    }
)
@click.version_option(package_name="supercritical-wave-lab")
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False, path_type=str),
    help="Path to a TOML or JSON run configuration (default: searches for wavelab.toml)",
)
@click.option("--out", help="Output path prefix (default: wavelab)")
@click.option("--seed", envvar="WAVELAB_SEED", type=int, help="Seed for random ensembles (default: 0)")
@click.option(
    "--threads",
    envvar="WAVELAB_THREADS",
    type=click.IntRange(min=1),
    help="Worker threads for ensembles and scans (default: 1)",
)
@click.option(
    "--log-level",
    envvar="WAVELAB_LOG_LEVEL",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    help="Logging level (default: INFO)",
)
@click.pass_context
def main(
    ctx: click.Context,
    config: str | None,
    out: str | None,
    seed: int | None,
    threads: int | None,
    log_level: str | None,
) -> None:
    """wavelab - numerical experiments for supercritical radial wave equations."""
    ctx.obj = {
        "config": config,
        "overrides": {"out": out, "seed": seed, "threads": threads, "log_level": log_level},
    }


@main.command()
def version() -> None:
    click.echo(f"wavelab {__version__}")


@main.command()
@click.option("--model", help="Model kind, e.g. cubic_focusing or wm_s3")
@click.option("--n", type=int, help="Number of radial nodes")
@click.option("--r-max", type=float, help="Outer radius of the grid")
@click.option("--dt", type=float, help="Time step")
@click.option("--t-end", type=float, help="Final time")
@click.option("--stride", type=int, help="Steps between recorded snapshots")
@click.option("--data", "data_kind", help="Initial data kind, e.g. gaussian or constant_ball")
@click.pass_context
def evolve(
    ctx: click.Context,
    model: str | None,
    n: int | None,
    r_max: float | None,
    dt: float | None,
    t_end: float | None,
    stride: int | None,
    data_kind: str | None,
) -> None:
    """Evolve initial data and write diagnostic series.

    Exits with 0 when the run completes, 2 when it blows up and 1 for invalid
    configurations.

    Examples:

        # Small Gaussian data for the focusing cubic
        wavelab evolve --model cubic_focusing --t-end 2

        # Everything from a configuration file
        wavelab --config runs/phi_T.toml evolve
    """
    _execute(
        ctx,
        run_evolve,
        model=_section(kind=model),
        grid=_section(n=n, r_max=r_max),
        time=_section(dt=dt, t_end=t_end, snapshot_stride=stride),
        data=_section(kind=data_kind),
    )


@main.command()
@click.option("--radius", "R", type=float, help="Exterior radius R")
@click.option("--ensemble", type=int, help="Number of random data")
@click.option("--t-probe", type=float, help="First probe time (default: 4R)")
@click.option("--plane", is_flag=True, help="Measure the plane datum (r^-3, 0) instead")
@click.pass_context
def channels(
    ctx: click.Context, R: float | None, ensemble: int | None, t_probe: float | None, plane: bool
) -> None:
    """Estimate the exterior energy constant over a random ensemble."""
    _execute(ctx, run_channels, channels=_section(R=R, ensemble=ensemble, T_probe=t_probe, plane=plane or None))


@main.command()
@click.option("--model", type=click.Choice(["cubic", "pendulum_sin", "pendulum_sinh"]))
@click.option("--ell", type=float, help="Asymptotic coefficient of r^3 phi")
@click.option("--s-min", type=float, help="Smallest log r to integrate down to")
@click.pass_context
def stationary(ctx: click.Context, model: str | None, ell: float | None, s_min: float | None) -> None:
    """Compute a singular stationary profile along the stable manifold."""
    _execute(ctx, run_stationary, stationary=_section(model=model, ell=ell, s_min=s_min))


@main.command()
@click.option("--t-plus", "T_plus", type=float, help="Blow-up time of the self-similar frame")
@click.option("--s-end", type=float, help="Final self-similar time")
@click.option("--eps", type=float, help="Distance of the truncated boundary from y = 1")
@click.option("--wave-map", is_flag=True, help="Use the sphere wave map nonlinearity")
@click.pass_context
def selfsimilar(
    ctx: click.Context, T_plus: float | None, s_end: float | None, eps: float | None, wave_map: bool
) -> None:
    """Evolve data in self-similar variables and check the Lyapunov identity."""
    _execute(ctx, run_selfsimilar, selfsimilar=_section(T_plus=T_plus, s_end=s_end, eps=eps, wave_map=wave_map or None))


@main.command()
@click.option("--k", "ks", type=int, multiple=True, help="Frequency band index, repeatable")
@click.option("--decay", "L", type=float, help="Decay exponent L of the bound")
@click.pass_context
def kernel(ctx: click.Context, ks: tuple[int, ...], L: float | None) -> None:
    """Sweep the localized half-wave kernel and fit its decay bound."""
    _execute(ctx, run_kernel, kernel=_section(k=list(ks) or None, L=L))


@main.command()
@click.option(
    "--file",
    "path",
    type=click.Path(exists=True, dir_okay=False, path_type=str),
    help="State CSV to analyse instead of the configured data",
)
@click.pass_context
def norms(ctx: click.Context, path: str | None) -> None:
    """Report norms, frequency envelope and compactness scales of one state."""
    _execute(ctx, run_norms, data=_section(kind="file" if path else None, path=path))


if __name__ == "__main__":
    main()
