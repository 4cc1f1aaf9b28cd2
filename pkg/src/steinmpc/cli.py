"""Command line entry points: run experiments, summarize dumps, list presets."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import harness


@click.group()
def main():
    """Particle-based stochastic MPC and trajectory optimization harness."""


@main.command()
@click.argument("config")
@click.option("--seed", type=int, default=None, help="Override the root seed.")
@click.option("--trials", type=int, default=None, help="Override the trial count.")
@click.option("--workers", type=int, default=None, help="Parallel trial processes.")
@click.option(
    "--out",
    type=click.Path(file_okay=False),
    default="runs",
    show_default=True,
    help="Output directory for dumps and the summary.",
)
def run(config, seed, trials, workers, out):
    """Run one experiment from a preset name or a config file path."""
    if config in harness.PRESETS:
        cfg = dict(harness.PRESETS[config])
    elif Path(config).is_file():
        cfg = harness.load_config(config)
    else:
        click.echo(
            f"error: {config!r} is neither a preset nor a config file", err=True
        )
        sys.exit(1)
    if seed is not None:
        cfg["seed"] = str(seed)
    if trials is not None:
        cfg["trials"] = str(trials)
    try:
        stats = harness.run_experiment(cfg, out, workers=workers)
    except harness.ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(harness.summary_table([stats]))


@main.command()
@click.argument("dump_dir", type=click.Path(exists=True, file_okay=False))
def summarize(dump_dir):
    """Print the summary table stored in DUMP_DIR."""
    path = Path(dump_dir) / "summary.json"
    if not path.is_file():
        click.echo(f"error: no summary.json in {dump_dir}", err=True)
        sys.exit(1)
    try:
        payload = harness.read_summary(path)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    rows = [harness.SummaryStats(**row) for row in payload["rows"]]
    click.echo(harness.summary_table(rows))


@main.command()
def presets():
    """List available experiment presets."""
    for name in harness.PRESETS:
        click.echo(name)


if __name__ == "__main__":
    main()
