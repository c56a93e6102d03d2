"""Task registry and cooperative-constraint engine.

Each task carries a participation threshold ``p``, an optional capability
(tool tier) requirement, a spatial radius and a dependency descriptor list.
Per-step evaluation produces a verdict with four components:

* spatial   — at least one agent is within radius of the task anchor;
* temporal  — at least one proximate agent issues the task's required action;
* participation — at least ``p`` agents simultaneously satisfy capability,
  proximity and engagement (the conjunctive quorum);
* dependency — every prerequisite descriptor is satisfied.

Participation is the strict quorum predicate; the spatial and temporal
components deliberately use an existential reading so that failure
attribution can separate "nobody ever got there" from "the team was on-site
but under-quorum".  Per-agent counts are carried alongside the booleans for
the constraint-improvement metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .kernel import EpisodeRecord, VerdictRecord, agent_alias

TOOL_TIERS = {"none": 0, "wood_pickaxe": 1, "stone_pickaxe": 2, "iron_pickaxe": 3}


class FeedbackDisabledError(Exception):
    pass


def tool_at_least(held: set[str], required: Optional[str]) -> bool:
    """Tier dominance: the agent holds a tool of at least the required tier."""
    if required is None or required == "none":
        return True
    need = TOOL_TIERS[required]
    return any(TOOL_TIERS.get(t, 0) >= need for t in held)


@dataclass(frozen=True)
class Dependency:
    """A prerequisite descriptor with an environment-checked satisfied flag."""

    name: str
    satisfied: bool


@dataclass(frozen=True)
class CapabilityState:
    """One agent's embodied capability snapshot at action time."""

    agent: int
    position: tuple[int, int]
    tools: frozenset[str] = frozenset()
    inventory: tuple[tuple[str, int], ...] = ()
    action: Any = None  # issued primitive action, env-specific


@dataclass
class Task:
    """A cooperative task over an environment anchor (node or block face)."""

    task_id: str
    anchor_cells: tuple[tuple[int, int], ...]  # cells the spatial predicate measures to
    required_participation: int
    radius: int = 1
    required_tool: Optional[str] = None
    state: str = "pending"  # pending | in_progress | done
    dependencies: list[Dependency] = field(default_factory=list)
    # engagement_check(cap) -> bool: does this capability's action engage the task
    engagement_check: Any = None
    # proximity_check(cap) -> bool: env override for the spatial predicate;
    # Manhattan distance to the anchor cells is used when unset
    proximity_check: Any = None

    def __post_init__(self):
        if self.required_participation < 1:
            raise ValueError("participation threshold must be >= 1")

    @property
    def done(self) -> bool:
        return self.state == "done"

    def distance(self, position: tuple[int, int]) -> int:
        return min(
            abs(position[0] - r) + abs(position[1] - c) for r, c in self.anchor_cells
        )


def per_agent_predicates(task: Task, cap: CapabilityState) -> tuple[bool, bool, bool]:
    """(capability, proximity, engagement) for one agent against one task."""
    capability = tool_at_least(set(cap.tools), task.required_tool)
    if task.proximity_check is not None:
        proximity = bool(task.proximity_check(cap))
    else:
        proximity = task.distance(cap.position) <= task.radius
    engaged = bool(task.engagement_check(cap)) if task.engagement_check else False
    return capability, proximity, engaged


def qualifying_agents(task: Task, caps: list[CapabilityState]) -> list[int]:
    """Agents satisfying all three per-agent predicates."""
    out = []
    for cap in caps:
        capability, proximity, engaged = per_agent_predicates(task, cap)
        if capability and proximity and engaged:
            out.append(cap.agent)
    return out


def evaluate(task: Task, caps: list[CapabilityState], step: int) -> VerdictRecord:
    """Evaluate all four constraint components for an active task."""
    n_prox = 0
    n_eng = 0
    n_qual = 0
    for cap in caps:
        capability, proximity, engaged = per_agent_predicates(task, cap)
        if proximity:
            n_prox += 1
        if proximity and engaged:
            n_eng += 1
        if capability and proximity and engaged:
            n_qual += 1
    deps_ok = sum(1 for d in task.dependencies if d.satisfied)
    return VerdictRecord(
        task=task.task_id,
        step=step,
        spatial=n_prox >= 1,
        temporal=n_eng >= 1,
        participation=n_qual >= task.required_participation,
        dependency=deps_ok == len(task.dependencies),
        n_proximate=n_prox,
        n_engaged=n_eng,
        n_qualifying=n_qual,
        n_deps_satisfied=deps_ok,
        n_deps_total=len(task.dependencies),
    )


@dataclass(frozen=True)
class FeedbackSnapshot:
    """Structured quorum status for one task, exposed when feedback is on."""

    task: str
    required_participation: int
    ratio: float
    participants: tuple[str, ...]  # agent aliases
    dependencies: tuple[tuple[str, bool], ...]
    violated: tuple[str, ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "required_participation": self.required_participation,
            "ratio": self.ratio,
            "participants": list(self.participants),
            "dependencies": [[n, s] for n, s in self.dependencies],
            "violated": list(self.violated),
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "FeedbackSnapshot":
        return cls(
            task=d["task"],
            required_participation=d["required_participation"],
            ratio=d["ratio"],
            participants=tuple(d["participants"]),
            dependencies=tuple((n, s) for n, s in d["dependencies"]),
            violated=tuple(d["violated"]),
        )


def feedback(task: Task, verdict: VerdictRecord, caps: list[CapabilityState],
             enabled: bool = True) -> FeedbackSnapshot:
    if not enabled:
        raise FeedbackDisabledError("feedback is disabled in this configuration")
    participants = qualifying_agents(task, caps)
    return FeedbackSnapshot(
        task=task.task_id,
        required_participation=task.required_participation,
        ratio=len(participants) / task.required_participation,
        participants=tuple(agent_alias(a) for a in participants),
        dependencies=tuple((d.name, d.satisfied) for d in task.dependencies),
        violated=tuple(verdict.violated),
    )


def failure_time(record: EpisodeRecord) -> Optional[int]:
    """First termination step of an unsuccessful episode, None on success."""
    if record.team_success:
        return None
    return record.termination_step
