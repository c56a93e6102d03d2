"""Readers for the public trace (JSON lines) and metrics report formats.

Only the on-disk formats are parsed here; nothing is imported from the
producing library.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any

METRIC_NAMES = tuple(f"M{i}" for i in range(1, 19))


class TraceFormatError(Exception):
    pass


class ReportFormatError(Exception):
    pass


@dataclass
class Trace:
    header: dict[str, Any]
    steps: list[dict[str, Any]] = field(default_factory=list)
    end: dict[str, Any] = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        n = self.header.get("n_agents")
        if n:
            return int(n)
        seen = {
            ev["agent"] for s in self.steps for ev in s.get("cognitive_events", [])
        }
        return max(seen) + 1 if seen else 0

    def cognitive_events(self) -> list[dict[str, Any]]:
        return [ev for s in self.steps for ev in s.get("cognitive_events", [])]

    def plan_events(self) -> list[dict[str, Any]]:
        return [ev for s in self.steps for ev in s.get("plan_events", [])]

    def messages(self) -> list[dict[str, Any]]:
        return [m for s in self.steps for m in s.get("messages", [])]


def load_trace(path: str) -> Trace:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines:
        raise TraceFormatError(f"{path}: empty trace file")
    records = []
    for i, line in enumerate(lines):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"{path}: bad JSON on line {i + 1}: {exc}") from exc
    header = records[0]
    if header.get("type") != "header":
        raise TraceFormatError(f"{path}: first line is not a header record")
    trace = Trace(header=header)
    for rec in records[1:]:
        kind = rec.get("type")
        if kind == "step":
            trace.steps.append(rec)
        elif kind == "end":
            trace.end = rec
        else:
            raise TraceFormatError(f"{path}: unknown record type {kind!r}")
    return trace


def _check_metrics(label: str, metrics: dict[str, Any]) -> dict[str, float]:
    missing = [m for m in METRIC_NAMES if m not in metrics]
    if missing:
        raise ReportFormatError(f"{label}: missing metrics {', '.join(missing)}")
    return {m: float(metrics[m]) for m in METRIC_NAMES}


def load_report_series(path: str, group_by: str = "topology") -> dict[str, dict[str, float]]:
    """Series (label -> M1..M18) from one report file.

    Two shapes are accepted: a sweep summary with per-group aggregate
    ``cells`` (one series per group key), or a flat ``{"M1": ...}`` object
    (one series named after the file).
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ReportFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ReportFormatError(f"{path}: report must be a JSON object")
    if "cells" in doc:
        series = {}
        for key, cell in sorted(doc["cells"].items()):
            if not cell.get("episodes"):
                continue
            series[str(key)] = _check_metrics(f"{path}:{key}", cell.get("mean", {}))
        if not series:
            raise ReportFormatError(f"{path}: no populated cells")
        return series
    if "metrics" in doc:
        label = str(doc.get(group_by) or doc.get("label")
                    or os.path.splitext(os.path.basename(path))[0])
        return {label: _check_metrics(path, doc["metrics"])}
    label = os.path.splitext(os.path.basename(path))[0]
    return {label: _check_metrics(path, doc)}
