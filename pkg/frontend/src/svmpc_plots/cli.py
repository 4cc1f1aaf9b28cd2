"""Command line entry point: render one figure from one dump file."""

from __future__ import annotations

import sys

import click

from . import dumps, plots

KINDS = ("nav_episode", "planner_snapshots", "summary_table")


@click.command()
@click.argument("kind", type=click.Choice(KINDS))
@click.argument("dump", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "-o",
    "--out",
    required=True,
    type=click.Path(dir_okay=False),
    help="Output image path (format from the extension).",
)
def main(kind, dump, out):
    """Render KIND from the dump file DUMP into an image."""
    try:
        if kind == "nav_episode":
            header, records = dumps.read_episode_dump(dump)
            plots.plot_nav_episode(header, records, out)
        elif kind == "planner_snapshots":
            header, rows = dumps.read_planning_dump(dump)
            plots.plot_planner_snapshots(header, rows, out)
        else:
            payload = dumps.read_summary(dump)
            plots.plot_summary_table(payload, out)
    except (dumps.SchemaError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(out)


if __name__ == "__main__":
    main()
