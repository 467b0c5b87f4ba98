"""Command-line entry points for the experiment pipeline.

Exit codes: 0 on success, 2 on configuration errors, 3 on stage failures.
"""

from __future__ import annotations

import sys

import click

from .errors import ConfigError, EnvsensError
from .pipeline import (
    Manifest,
    load_config,
    stage_generate_weather,
    stage_report,
    stage_sweep,
    stage_target,
)

EXIT_CONFIG = 2
EXIT_STAGE = 3


def _load(config_path, seed):
    try:
        return load_config(config_path, seed_override=seed)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def _run(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except EnvsensError as exc:
        click.echo(f"stage failed: {exc}", err=True)
        sys.exit(EXIT_STAGE)


config_option = click.option(
    "--config", "config_path", required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Experiment config JSON.",
)
seed_option = click.option("--seed", type=int, default=None,
                           help="Override the master seed.")


@click.group()
def main():
    """Weather-variability experiment pipeline."""


@main.command("generate-weather")
@config_option
@seed_option
def cmd_generate_weather(config_path, seed):
    """Fit weather models and write the pick-freeze sample files."""
    cfg = _load(config_path, seed)
    manifest = Manifest(cfg.output_dir)
    plan = _run(stage_generate_weather, cfg, manifest)
    click.echo(f"weather: {len(plan.rows)} sample files under {cfg.output_dir / 'weather'}")


@main.command("target")
@config_option
@seed_option
def cmd_target(config_path, seed):
    """Compute the ground-truth target R*_eq of the building spec."""
    cfg = _load(config_path, seed)
    manifest = Manifest(cfg.output_dir)
    payload = _run(stage_target, cfg, manifest)
    click.echo(
        f"target R*_eq = {payload['r_eq_star'] * 1000:.3f} K/kW "
        f"(HTC {payload['htc']:.1f} W/K, R2 {payload['r_squared']:.6f})"
    )
    if payload.get("warning_low_r2"):
        click.echo("warning: target regression R2 < 0.99, steady state not reached",
                   err=True)


@main.command("sweep")
@config_option
@seed_option
@click.option("--workers", type=int, default=1, help="Parallel fit workers.")
@click.option("--resume", is_flag=True, help="Reuse existing per-row results.")
def cmd_sweep(config_path, seed, workers, resume):
    """Simulate every plan row and calibrate all duration subsets."""
    cfg = _load(config_path, seed)
    manifest = Manifest(cfg.output_dir)
    path = _run(stage_sweep, cfg, manifest, workers=workers, resume=resume)
    click.echo(f"estimates written to {path}")


@main.command("report")
@config_option
@seed_option
def cmd_report(config_path, seed):
    """Emit variability, sensitivity, convergence and scatter tables."""
    cfg = _load(config_path, seed)
    manifest = Manifest(cfg.output_dir)
    artifacts = _run(stage_report, cfg, manifest)
    for name, path in artifacts.items():
        click.echo(f"{name}: {path}")


@main.command("all")
@config_option
@seed_option
@click.option("--workers", type=int, default=1, help="Parallel fit workers.")
@click.option("--resume", is_flag=True, help="Reuse existing per-row results.")
def cmd_all(config_path, seed, workers, resume):
    """Run the complete pipeline: weather, target, sweep, report."""
    cfg = _load(config_path, seed)
    manifest = Manifest(cfg.output_dir)
    _run(stage_generate_weather, cfg, manifest)
    _run(stage_target, cfg, manifest)
    _run(stage_sweep, cfg, manifest, workers=workers, resume=resume)
    artifacts = _run(stage_report, cfg, manifest)
    for name, path in artifacts.items():
        click.echo(f"{name}: {path}")


if __name__ == "__main__":
    main()
