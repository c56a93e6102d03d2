"""Episode timeline figure: cognitive lanes, primitives, task progress."""

from __future__ import annotations

import warnings
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.lines import Line2D
from matplotlib.patches import Rectangle

from .io import Trace

STAGE_COLORS = {"R": "#4878cf", "W": "#b8b8b8", "X": "#6acc65", "I": "#d65f5f"}
PLAN_COLORS = {
    "created_new": "#2ca02c",    # new plans are green
    "replanned": "#2ca02c",
    "resumed": "#e6c229",        # resumed plans are yellow
    "interrupted": "#e6c229",
    "terminated_success": "#d62728",   # terminations are red
    "terminated_failure": "#d62728",
}

SAVE_KW = dict(dpi=150, metadata={"Software": "traceviz"})


def _lane_axis(ax, trace: Trace) -> int:
    """Top row: one lane per agent; every cognitive event is one marker."""
    n = trace.n_agents
    plotted = 0
    for agent in range(n):
        events = [ev for ev in trace.cognitive_events() if ev["agent"] == agent]
        if events:
            xs = [ev["event"] for ev in events]
            ys = [agent] * len(events)
            colors = [STAGE_COLORS.get(ev["stage"], "#000000") for ev in events]
            ax.scatter(xs, ys, c=colors, s=18, marker="s", zorder=3)
            plotted += len(events)
    for ev in trace.plan_events():
        color = PLAN_COLORS.get(ev["kind"])
        if color:
            ax.scatter([ev["event"]], [ev["agent"] + 0.28], c=color, s=12,
                       marker="v", zorder=4)
    for msg in trace.messages():
        for recipient in msg["recipients"]:
            ax.plot([msg["send_event"], msg["send_event"]],
                    [msg["sender"], recipient],
                    color="#888888", linewidth=0.6, alpha=0.7, zorder=2)
    ax.set_ylabel("agent")
    ax.set_yticks(list(range(n)))
    ax.set_yticklabels([f"agent_{a}" for a in range(n)])
    ax.set_xlabel("cognitive event")
    handles = [Line2D([], [], marker="s", linestyle="", color=c, label=s)
               for s, c in STAGE_COLORS.items()]
    handles += [
        Line2D([], [], marker="v", linestyle="", color="#2ca02c", label="new plan"),
        Line2D([], [], marker="v", linestyle="", color="#e6c229", label="resumed"),
        Line2D([], [], marker="v", linestyle="", color="#d62728", label="terminated"),
    ]
    ax.legend(handles=handles, loc="upper right", fontsize=6, ncol=2)
    return plotted


def _primitive_axis(ax, trace: Trace) -> None:
    """Middle row: the primitive each agent executed at each env step."""
    actions: dict[str, int] = {}
    for step in trace.steps:
        for prim in step.get("joint_action", {}).values():
            actions.setdefault(str(prim), len(actions))
    cmap = plt.get_cmap("tab20")
    for step in trace.steps:
        t = step["t"]
        for alias, prim in sorted(step.get("joint_action", {}).items()):
            agent = int(alias.split("_")[1])
            ax.add_patch(
                Rectangle((t, agent - 0.4), 1.0, 0.8,
                          facecolor=cmap(actions[str(prim)] % 20),
                          edgecolor="white", linewidth=0.3)
            )
    n = trace.n_agents
    ax.set_xlim(0, max(len(trace.steps), 1))
    ax.set_ylim(-0.6, max(n - 0.4, 0.6))
    ax.set_yticks(list(range(n)))
    ax.set_yticklabels([f"agent_{a}" for a in range(n)])
    ax.set_ylabel("primitive")
    ax.set_xlabel("env step")
    handles = [Line2D([], [], marker="s", linestyle="", label=p,
                      color=cmap(i % 20)) for p, i in sorted(actions.items())]
    if handles:
        ax.legend(handles=handles, loc="upper right", fontsize=6,
                  ncol=max(1, len(handles) // 2))


def _progress_axis(ax, trace: Trace) -> None:
    """Bottom row: satisfied-constraint counts and capability changes."""
    ts = [s["t"] for s in trace.steps]
    checks = ("spatial", "temporal", "participation", "dependency")
    satisfied = [
        sum(bool(v.get(c)) for v in s.get("verdicts", []) for c in checks)
        for s in trace.steps
    ]
    gains = [s.get("capability_gains", 0) for s in trace.steps]
    if ts:
        ax.step(ts, satisfied, where="post", color="#4878cf",
                label="satisfied constraints")
        ax.bar(ts, gains, color="#6acc65", width=0.8, align="edge",
               label="capability gains")
        ax.legend(loc="upper left", fontsize=6)
    ax.set_xlabel("env step")
    ax.set_ylabel("task state")


def render_timeline(trace: Trace, out_path: str, title: str | None = None) -> dict[str, Any]:
    """Render the three-row timeline; returns summary counts for callers."""
    fig, (ax_top, ax_mid, ax_bot) = plt.subplots(
        3, 1, figsize=(11, 7),
        gridspec_kw={"height_ratios": [3, 2, 1]},
    )
    if not trace.steps:
        warnings.warn(f"trace has no steps; rendering empty axes to {out_path}")
    lane_events = _lane_axis(ax_top, trace)
    _primitive_axis(ax_mid, trace)
    _progress_axis(ax_bot, trace)
    fig.suptitle(title or "episode timeline")
    fig.tight_layout()
    fig.savefig(out_path, **SAVE_KW)
    plt.close(fig)
    return {
        "lane_events": lane_events,
        "trace_events": len(trace.cognitive_events()),
        "steps": len(trace.steps),
    }
