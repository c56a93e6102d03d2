"""Command-line entry points for traceviz."""

from __future__ import annotations

import sys

import click

from .io import ReportFormatError, TraceFormatError, load_trace
from .radar import render_radar
from .timeline import render_timeline


@click.group()
def main() -> None:
    """Render figures from episode traces and metric reports."""


@main.command()
@click.argument("trace", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", "out_path", required=True,
              type=click.Path(dir_okay=False), help="Output PNG path.")
@click.option("--title", default=None, help="Figure title.")
def timeline(trace: str, out_path: str, title: str | None) -> None:
    """Render an episode timeline from a TRACE file (JSON lines)."""
    try:
        info = render_timeline(load_trace(trace), out_path, title=title)
    except TraceFormatError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(
        f"wrote {out_path} ({info['steps']} steps, "
        f"{info['trace_events']} cognitive events)"
    )


@main.command()
@click.argument("reports", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--group-by", default="topology", show_default=True,
              help="Report field used to label each series.")
@click.option("-o", "--out", "out_path", required=True,
              type=click.Path(dir_okay=False), help="Output PNG path.")
@click.option("--title", default=None, help="Figure title.")
def radar(reports: tuple[str, ...], group_by: str, out_path: str,
          title: str | None) -> None:
    """Render a radar chart comparing metric REPORTS (JSON files)."""
    try:
        info = render_radar(list(reports), out_path, group_by=group_by,
                            title=title)
    except ReportFormatError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {out_path} ({len(info['series'])} series)")
