"""Experiment harness: configured runs, sweeps, paired feedback arms.

The harness is the only layer that touches the filesystem; everything below
it operates on in-memory records.  Traces written here are byte-identical
across re-runs of the same configuration.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import asdict, dataclass, field
from importlib import resources as importlib_resources
from typing import Any, Optional

import numpy as np

from . import metrics as metrics_mod
from .agents import RemotePolicy, make_scripted_policy
from .agents.base import Policy
from .agents.scripted import SCRIPTED_POLICIES
from .comm import TOPOLOGY_KINDS, Topology
from .envs import make_env
from .kernel import EpisodeRecord, TraceWriter, load_trace
from .maeil import run_episode_loop, validate_record

DEFAULT_MAX_STEPS = {"cube": 200, "craftlite": 100}


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    env: str = "craftlite"
    difficulty: str = "easy"
    n_agents: int = 3
    topology: str = "individual"
    backend: str = "idler"  # scripted policy name or "remote"
    seed: int = 0
    max_steps: Optional[int] = None
    feedback: bool = True

    def __post_init__(self):
        if self.env not in ("cube", "craftlite"):
            raise ConfigError(f"unknown env {self.env!r}")
        allowed = {"cube": ("easy", "hard", "auto"), "craftlite": ("easy", "hard")}
        if self.difficulty not in allowed[self.env]:
            raise ConfigError(
                f"unknown difficulty {self.difficulty!r} for env {self.env!r}"
            )
        if self.topology not in TOPOLOGY_KINDS:
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.backend != "remote" and self.backend not in SCRIPTED_POLICIES:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.n_agents < 1:
            raise ConfigError("need at least one agent")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("max_steps must be non-negative")

    @property
    def steps(self) -> int:
        if self.max_steps is not None:
            return self.max_steps
        return DEFAULT_MAX_STEPS[self.env]

    def header(self) -> dict[str, Any]:
        return {
            "env": self.env,
            "difficulty": self.difficulty,
            "n_agents": self.n_agents,
            "topology": self.topology,
            "backend": self.backend,
            "seed": self.seed,
            "max_steps": self.steps,
            "feedback_enabled": self.feedback,
        }


def load_role_prompt(topology: str, role: str = "peer") -> str:
    if topology == "centralized":
        name = f"centralized_{role}.txt"
    else:
        name = f"{topology}.txt"
    ref = importlib_resources.files("emcoop.data.prompts") / name
    return ref.read_text(encoding="utf-8")


def make_policies(config: RunConfig) -> dict[int, Policy]:
    policies: dict[int, Policy] = {}
    for agent in range(config.n_agents):
        if config.backend == "remote":
            policies[agent] = RemotePolicy(agent)
        else:
            policies[agent] = make_scripted_policy(config.backend, config.seed, agent)
    return policies


def run(config: RunConfig, out: Optional[str] = None) -> EpisodeRecord:
    """Run one episode; optionally stream the trace to ``out``."""
    env = make_env(
        config.env,
        difficulty=config.difficulty,
        n_agents=config.n_agents,
        seed=config.seed,
        max_steps=config.steps,
    )
    topology = Topology(kind=config.topology, n_agents=config.n_agents)
    policies = make_policies(config)
    if out:
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            writer = TraceWriter(f, config.header())
            return run_episode_loop(
                env, policies, topology,
                max_steps=config.steps,
                feedback_enabled=config.feedback,
                header=config.header(),
                writer=writer,
            )
    return run_episode_loop(
        env, policies, topology,
        max_steps=config.steps,
        feedback_enabled=config.feedback,
        header=config.header(),
    )


def sweep(
    base: RunConfig,
    seeds: list[int],
    topologies: Optional[list[str]] = None,
    out_dir: Optional[str] = None,
) -> dict[str, Any]:
    """Every (topology, seed) pair of a base config, plus per-cell aggregates.

    A failing episode is recorded under ``errors`` and the sweep continues.
    Returns {"reports": per-episode MetricsReport, "cells": per-topology
    aggregates (metric mean/std + success rate), "errors": label -> message}.
    """
    topologies = topologies or list(TOPOLOGY_KINDS)
    reports: dict[str, metrics_mod.MetricsReport] = {}
    successes: dict[str, list[bool]] = {t: [] for t in topologies}
    cell_reports: dict[str, list[metrics_mod.MetricsReport]] = {
        t: [] for t in topologies
    }
    errors: dict[str, str] = {}
    for topology in topologies:
        for seed in seeds:
            cfg = RunConfig(**{**asdict(base), "topology": topology, "seed": seed})
            label = f"{cfg.env}-{cfg.difficulty}-{topology}-s{seed}"
            trace_path = None
            if out_dir:
                trace_path = os.path.join(out_dir, f"{label}.jsonl")
            try:
                record = run(cfg, out=trace_path)
            except Exception as exc:  # partial-failure policy
                errors[label] = f"{type(exc).__name__}: {exc}"
                continue
            reports[label] = metrics_mod.compute(record)
            successes[topology].append(record.team_success)
            cell_reports[topology].append(reports[label])
    cells: dict[str, dict[str, Any]] = {}
    for topology in topologies:
        rs = cell_reports[topology]
        if not rs:
            cells[topology] = {"episodes": 0}
            continue
        columns = list(zip(*(r.as_tuple() for r in rs)))
        cells[topology] = {
            "episodes": len(rs),
            "success_rate": sum(successes[topology]) / len(rs),
            "mean": dict(zip(metrics_mod.METRIC_NAMES,
                             (float(np.mean(c)) for c in columns))),
            "std": dict(zip(metrics_mod.METRIC_NAMES,
                            (float(np.std(c)) for c in columns))),
        }
    result = {"reports": reports, "cells": cells, "errors": errors}
    if out_dir:
        with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8", newline="\n") as f:
            metrics_mod.write_csv(reports, f)
        with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8") as f:
            json.dump(
                {
                    "reports": {x: r.to_json() for x, r in sorted(reports.items())},
                    "cells": cells,
                    "errors": errors,
                },
                f, indent=2, sort_keys=True,
            )
            f.write("\n")
    return result


def cooperative_collections(record: EpisodeRecord) -> int:
    """Quorum collections achieved in a craftlite episode (0 for cube)."""
    if not record.entries:
        return 0
    return int(record.entries[-1].state_after.get("quorum_collections", 0))


def feedback_gap(
    base: RunConfig,
    seeds: list[int],
    control_backend: Optional[str] = None,
) -> dict[str, Any]:
    """Paired feedback-on vs feedback-off arms over matched seeds.

    The feedback arm runs ``base`` with feedback enabled; the control arm
    runs with feedback disabled, optionally under a different scripted
    backend (e.g. follow-feedback vs plain greedy). The gap is the success
    rate difference E[Y with] - E[Y without].
    """
    pairs = []
    for seed in seeds:
        on = run(RunConfig(**{**asdict(base), "seed": seed, "feedback": True}))
        off_cfg = {**asdict(base), "seed": seed, "feedback": False}
        if control_backend is not None:
            off_cfg["backend"] = control_backend
        off = run(RunConfig(**off_cfg))
        pairs.append(
            {
                "seed": seed,
                "collections_with": cooperative_collections(on),
                "collections_without": cooperative_collections(off),
                "success_with": on.team_success,
                "success_without": off.team_success,
            }
        )
    n = len(pairs)
    gap = (
        (
            sum(p["success_with"] for p in pairs)
            - sum(p["success_without"] for p in pairs)
        )
        / n
        if n
        else 0.0
    )
    return {"pairs": pairs, "gap": gap}


class NoFailuresError(Exception):
    """Raised when attribution is requested but every episode succeeded."""


def attribute(records_or_paths, k: int = 3) -> dict[str, Any]:
    """Failure windows plus an aggregate violated-component histogram."""
    if not isinstance(records_or_paths, (list, tuple)):
        records_or_paths = [records_or_paths]
    per_trace = []
    histogram: dict[str, int] = {}
    for item in records_or_paths:
        record = load_trace(item) if isinstance(item, str) else item
        try:
            report = metrics_mod.attribute_failure(record, k=k)
        except metrics_mod.NoFailureError:
            continue
        per_trace.append(report)
        for component, count in report["histogram"].items():
            histogram[component] = histogram.get(component, 0) + count
    if not per_trace:
        raise NoFailuresError("every episode succeeded")
    total = sum(histogram.values())
    return {
        "per_trace": per_trace,
        "histogram": {k_: histogram[k_] for k_ in sorted(histogram)},
        "histogram_share": (
            {k_: histogram[k_] / total for k_ in sorted(histogram)} if total else {}
        ),
    }


def validate(record_or_path) -> list[str]:
    record = (
        load_trace(record_or_path)
        if isinstance(record_or_path, str)
        else record_or_path
    )
    return validate_record(record)
