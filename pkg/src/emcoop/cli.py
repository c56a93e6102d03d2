"""Command line interface."""

from __future__ import annotations

import json
import sys

import click

from . import harness, metrics as metrics_mod
from .harness import ConfigError, NoFailuresError, RunConfig
from .kernel import TraceSchemaError, load_trace
from .maeil import DeadlockError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _config_options(fn):
    opts = [
        click.option("--env", default="craftlite", show_default=True,
                     help="Environment: cube or craftlite."),
        click.option("--difficulty", default="easy", show_default=True),
        click.option("--agents", "n_agents", default=3, show_default=True, type=int),
        click.option("--topology", default="individual", show_default=True),
        click.option("--backend", default="idler", show_default=True,
                     help="Scripted policy name or 'remote'."),
        click.option("--seed", default=0, show_default=True, type=int),
        click.option("--max-steps", default=None, type=int),
        click.option("--feedback/--no-feedback", default=True, show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_config(**kw) -> RunConfig:
    try:
        return RunConfig(**kw)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


def _run_guarded(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (DeadlockError, RuntimeError) as exc:
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


@click.group()
def main():
    """Cooperation benchmark for embodied multi-agent episodes."""


@main.command("run")
@_config_options
@click.option("--out", default=None, help="Trace output path (JSON lines).")
def run_cmd(out, **kw):
    """Run one episode and print a summary."""
    config = _build_config(**kw)
    record = _run_guarded(harness.run, config, out=out)
    report = metrics_mod.compute(record)
    click.echo(json.dumps(
        {
            "team_success": record.team_success,
            "termination_step": record.termination_step,
            "termination_kind": record.termination_kind,
            "metrics": report.to_json(),
            "trace": out,
        },
        indent=2, sort_keys=True,
    ))


@main.command("sweep")
@_config_options
@click.option("--seeds", default=5, show_default=True, type=int,
              help="Number of seeds (0..N-1) per topology.")
@click.option("--out-dir", default=None, help="Write traces and metrics here.")
def sweep_cmd(seeds, out_dir, **kw):
    """Run every topology over a seed range and tabulate metrics."""
    config = _build_config(**kw)
    result = _run_guarded(
        harness.sweep, config, seeds=list(range(seeds)), out_dir=out_dir
    )
    click.echo(json.dumps(
        {
            "reports": {
                label: r.to_json()
                for label, r in sorted(result["reports"].items())
            },
            "cells": result["cells"],
            "errors": result["errors"],
        },
        indent=2, sort_keys=True,
    ))


@main.command("feedback-gap")
@_config_options
@click.option("--seeds", default=20, show_default=True, type=int)
@click.option("--control-backend", default=None,
              help="Backend for the no-feedback arm (defaults to the same).")
def feedback_gap_cmd(seeds, control_backend, **kw):
    """Paired runs with and without constraint feedback."""
    config = _build_config(**kw)
    result = _run_guarded(
        harness.feedback_gap, config, seeds=list(range(seeds)),
        control_backend=control_backend,
    )
    click.echo(json.dumps(result, indent=2, sort_keys=True))


@main.command("metrics")
@click.argument("trace", type=click.Path(exists=True))
@click.option("--csv", "csv_path", default=None, help="Also write a CSV row.")
def metrics_cmd(trace, csv_path):
    """Recompute metrics from a trace file."""
    try:
        record = load_trace(trace)
    except TraceSchemaError as exc:
        click.echo(f"invalid trace: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    report = metrics_mod.compute(record)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="\n") as f:
            metrics_mod.write_csv({trace: report}, f)
    click.echo(json.dumps(report.to_json(), indent=2, sort_keys=True))


@main.command("attribute")
@click.argument("traces", type=click.Path(exists=True), nargs=-1, required=True)
@click.option("-k", "window", default=3, show_default=True, type=int,
              help="Stage samples per agent in the failure window.")
def attribute_cmd(traces, window):
    """Attribute unsuccessful episodes to violated constraint components."""
    records = []
    for trace in traces:
        try:
            records.append(load_trace(trace))
        except TraceSchemaError as exc:
            click.echo(f"invalid trace: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
    try:
        report = harness.attribute(records, k=window)
    except NoFailuresError as exc:
        click.echo(f"nothing to attribute: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(json.dumps(report, indent=2, sort_keys=True))


@main.command("validate")
@click.argument("trace", type=click.Path(exists=True))
def validate_cmd(trace):
    """Check a trace against the stage-machine legality rules."""
    try:
        record = load_trace(trace)
    except TraceSchemaError as exc:
        click.echo(f"invalid trace: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    violations = harness.validate(record)
    if violations:
        for v in violations:
            click.echo(v, err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo("ok")


if __name__ == "__main__":
    main()
