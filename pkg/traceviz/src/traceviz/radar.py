"""Radar comparison of metric reports on the 18 shared axes."""

from __future__ import annotations

import math
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .io import METRIC_NAMES, ReportFormatError, load_report_series

SAVE_KW = dict(dpi=150, metadata={"Software": "traceviz"})
SERIES_COLORS = ("#4878cf", "#d65f5f", "#6acc65", "#e6c229",
                 "#9467bd", "#8c564b", "#17becf", "#7f7f7f")


def collect_series(report_paths: list[str], group_by: str = "topology"
                   ) -> dict[str, dict[str, float]]:
    """Merge the series from every report file, keeping label order stable."""
    series: dict[str, dict[str, float]] = {}
    for path in report_paths:
        for label, metrics in load_report_series(path, group_by=group_by).items():
            key = label
            suffix = 2
            while key in series:
                key = f"{label} ({suffix})"
                suffix += 1
            series[key] = metrics
    return series


def normalize(series: dict[str, dict[str, float]]) -> dict[str, list[float]]:
    """Min-max scale each axis across the comparison group.

    An axis where every series holds the same value carries no contrast, so
    it is pinned to 0.5 for everyone.
    """
    scaled: dict[str, list[float]] = {label: [] for label in series}
    for name in METRIC_NAMES:
        values = [series[label][name] for label in series]
        lo, hi = min(values), max(values)
        span = hi - lo
        for label, value in zip(series, values):
            if span <= 0 or not math.isfinite(span):
                scaled[label].append(0.5)
            else:
                scaled[label].append((value - lo) / span)
    return scaled


def render_radar(report_paths: list[str], out_path: str,
                 group_by: str = "topology",
                 title: str | None = None) -> dict[str, Any]:
    """Render one closed polygon per series over the M1..M18 axes."""
    series = collect_series(report_paths, group_by=group_by)
    if len(series) < 2:
        raise ReportFormatError(
            f"need at least 2 series to compare, got {len(series)} "
            f"from {len(report_paths)} report file(s)"
        )
    scaled = normalize(series)

    n_axes = len(METRIC_NAMES)
    angles = [2 * math.pi * i / n_axes for i in range(n_axes)]
    closed_angles = angles + angles[:1]

    fig, ax = plt.subplots(figsize=(8, 8), subplot_kw={"projection": "polar"})
    ax.set_theta_offset(math.pi / 2)
    ax.set_theta_direction(-1)
    for idx, (label, values) in enumerate(scaled.items()):
        closed = values + values[:1]
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        ax.plot(closed_angles, closed, color=color, linewidth=1.5, label=label)
        ax.fill(closed_angles, closed, color=color, alpha=0.15)
    ax.set_xticks(angles)
    ax.set_xticklabels(METRIC_NAMES, fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_yticks([0.0, 0.25, 0.5, 0.75, 1.0])
    ax.tick_params(axis="y", labelsize=7)
    ax.legend(loc="lower left", bbox_to_anchor=(1.02, 0.0), fontsize=8)
    fig.suptitle(title or f"metric comparison by {group_by}")
    fig.savefig(out_path, bbox_inches="tight", **SAVE_KW)
    plt.close(fig)
    return {"series": list(series), "scaled": scaled}
