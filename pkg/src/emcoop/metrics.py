"""Trace-level metrics M1..M18 and failure attribution.

All metrics are recomputable from a parsed trace alone; nothing here needs
the live environment.  Groups:

* M1-M5   cognitive dynamics: interval sample volume, decision time and
          barrier-wait sample counts per agent;
* M6-M8   communication: message events and per-agent send balance;
* M9-M12  planning dynamics: plan creations, interrupts, and the resume /
          replan split (M11 + M12 = 1 whenever M10 > 0);
* M13     plan coherence: fraction of agent pairs working the same task;
* M14     capability gain rate;
* M15-M18 constraint progress: step-over-step improvement scores (1 better,
          0.5 unchanged, 0 worse) on the spatial, temporal, participation
          and dependency measures.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields
from typing import Any

import numpy as np

from .kernel import EpisodeRecord

METRIC_NAMES = tuple(f"M{i}" for i in range(1, 19))


@dataclass(frozen=True)
class MetricsReport:
    m1: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0
    m5: float = 0.0
    m6: float = 0.0
    m7: float = 0.0
    m8: float = 0.0
    m9: float = 0.0
    m10: float = 0.0
    m11: float = 0.0
    m12: float = 0.0
    m13: float = 0.0
    m14: float = 0.0
    m15: float = 0.0
    m16: float = 0.0
    m17: float = 0.0
    m18: float = 0.0

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))

    def to_json(self) -> dict[str, float]:
        return dict(zip(METRIC_NAMES, self.as_tuple()))

    def to_csv_row(self) -> list[float]:
        return list(self.as_tuple())


def csv_header() -> list[str]:
    return list(METRIC_NAMES)


def write_csv(reports: dict[str, MetricsReport], stream: io.TextIOBase) -> None:
    """One labeled row per report, columns M1..M18."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["label"] + csv_header())
    for label in sorted(reports):
        writer.writerow([label] + [repr(v) for v in reports[label].to_csv_row()])


def _agent_ids(record: EpisodeRecord) -> list[int]:
    n = record.header.get("n_agents")
    if n:
        return list(range(int(n)))
    seen = {s.agent for s in record.stage_samples()}
    return sorted(seen)


def _mean(xs) -> float:
    xs = list(xs)
    return float(np.mean(xs)) if xs else 0.0


def _std(xs) -> float:
    xs = list(xs)
    return float(np.std(xs)) if xs else 0.0


def coherence(record: EpisodeRecord) -> float:
    """M13: mean fraction of unordered agent pairs sharing a plan task."""
    if not record.entries:
        return 0.0
    per_step = []
    for entry in record.entries:
        tasks = list(entry.plan_snapshot.values())
        n = len(tasks)
        if n < 2:
            per_step.append(0.0)
            continue
        same = sum(
            1
            for i in range(n)
            for j in range(i + 1, n)
            if tasks[i] == tasks[j]
        )
        per_step.append(same / (n * (n - 1) / 2))
    return _mean(per_step)


def _progress_series(record: EpisodeRecord) -> dict[str, list[int]]:
    series = {"spatial": [], "temporal": [], "participation": [], "dependency": []}
    for entry in record.entries:
        series["spatial"].append(sum(v.n_proximate for v in entry.verdicts))
        series["temporal"].append(sum(v.n_engaged for v in entry.verdicts))
        series["participation"].append(sum(v.n_qualifying for v in entry.verdicts))
        series["dependency"].append(sum(v.n_deps_satisfied for v in entry.verdicts))
    return series


def _improvement(values: list[int]) -> float:
    if len(values) < 2:
        return 0.0
    scores = []
    for prev, cur in zip(values, values[1:]):
        if cur > prev:
            scores.append(1.0)
        elif cur == prev:
            scores.append(0.5)
        else:
            scores.append(0.0)
    return _mean(scores)


def compute(record: EpisodeRecord) -> MetricsReport:
    if not record.entries:
        return MetricsReport()
    agents = _agent_ids(record)

    samples_per_interval = [len(e.cognitive_events) for e in record.entries]
    m1 = _mean(samples_per_interval)

    decision_time = {a: 0.0 for a in agents}
    for entry in record.entries:
        for agent, duration in entry.decisions:
            decision_time[agent] = decision_time.get(agent, 0.0) + duration
    m2 = _mean(decision_time.values())
    m3 = _std(decision_time.values())

    w_counts = {a: 0 for a in agents}
    for sample in record.stage_samples():
        if sample.stage == "W":
            w_counts[sample.agent] = w_counts.get(sample.agent, 0) + 1
    m4 = _mean(w_counts.values())
    m5 = _std(w_counts.values())

    m6 = float(sum(len(e.messages) for e in record.entries))
    sends = {a: 0 for a in agents}
    for msg in record.message_events():
        sends[msg.sender] = sends.get(msg.sender, 0) + 1
    m7 = _std(sends.values())
    m8 = _mean(sends.values())

    created = sum(1 for p in record.plan_events() if p.kind == "created_new")
    replanned = sum(1 for p in record.plan_events() if p.kind == "replanned")
    interrupted = sum(1 for p in record.plan_events() if p.kind == "interrupted")
    failures = sum(1 for p in record.plan_events() if p.kind == "terminated_failure")
    resumed = sum(1 for p in record.plan_events() if p.kind == "resumed")
    m9 = float(created + replanned)
    m10 = float(interrupted + failures)
    m11 = resumed / m10 if m10 else 0.0
    m12 = replanned / m10 if m10 else 0.0

    m13 = coherence(record)
    m14 = sum(e.capability_gains for e in record.entries) / len(record.entries)

    series = _progress_series(record)
    m15 = _improvement(series["spatial"])
    m16 = _improvement(series["temporal"])
    m17 = _improvement(series["participation"])
    m18 = _improvement(series["dependency"])

    return MetricsReport(
        m1, m2, m3, m4, m5, m6, m7, m8, m9, m10, m11, m12, m13, m14, m15, m16, m17, m18
    )


class NoFailureError(Exception):
    """Raised when failure attribution is requested for a successful episode."""


def attribute_failure(record: EpisodeRecord, k: int = 3) -> dict[str, Any]:
    """Failure window and violated-component histogram at the failure step.

    The window holds each agent's ``k`` most recent stage samples and the
    final interval's messages.  Only tasks with at least one proximate agent
    enter the histogram (the team at least attempted them); if no task was
    ever approached it falls back to all active tasks of the final step.
    """
    if record.team_success or not record.entries:
        raise NoFailureError("episode succeeded; nothing to attribute")
    final = record.entries[-1]
    window: dict[str, list[str]] = {}
    for sample in record.stage_samples():
        lane = window.setdefault(f"agent_{sample.agent}", [])
        lane.append(sample.stage)
    window = {agent: lane[-k:] for agent, lane in sorted(window.items())}
    messages = [
        {"sender": m.sender, "recipients": sorted(m.recipients)}
        for m in final.messages
    ]
    verdicts = [v for v in final.verdicts if v.n_proximate >= 1]
    if not verdicts:
        verdicts = list(final.verdicts)
    counts: dict[str, int] = {}
    violated: dict[str, list[str]] = {}
    for v in verdicts:
        if v.violated:
            violated[v.task] = sorted(v.violated)
        for component in v.violated:
            counts[component] = counts.get(component, 0) + 1
    total = sum(counts.values())
    return {
        "failure_time": record.termination_step,
        "window": window,
        "messages": messages,
        "violated": violated,
        "histogram": {k_: counts[k_] for k_ in sorted(counts)},
        "histogram_share": (
            {k_: counts[k_] / total for k_ in sorted(counts)} if total else {}
        ),
    }
