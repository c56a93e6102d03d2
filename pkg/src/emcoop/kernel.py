"""Core identifiers, dual-clock bookkeeping, trace containers and trace I/O.

Two clocks govern an episode: the environment clock ``t`` (discrete steps at
which joint primitive actions apply) and a cognitive clock realized as a
global, strictly monotone event counter.  Completion of environment step ``t``
consumes one event index; the half-open interval between two consecutive
completion events is the cognitive interval of that step, and every cognitive
sample falls in exactly one interval.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

TRACE_SCHEMA_VERSION = "emcoop-trace/1"


class StepMismatchError(Exception):
    """Raised when log entries arrive out of order."""


class TraceSchemaError(Exception):
    """Raised when a trace file does not parse against the trace schema."""


def agent_alias(agent_id: int) -> str:
    return f"agent_{agent_id}"


def parse_agent_alias(alias: str) -> int:
    if not alias.startswith("agent_"):
        raise ValueError(f"not an agent alias: {alias!r}")
    return int(alias[len("agent_"):])


@dataclass
class ClockMap:
    """Map from cognitive events to the latest completed environment step.

    ``completed`` holds (env_step, event) pairs marking the event at which
    each step completed.  Step 0 completes at episode start (event 0) so the
    map is total from the first cognitive event onward.
    """

    completed: list[tuple[int, int]] = field(default_factory=list)

    def mark_completed(self, env_step: int, event: int) -> None:
        if self.completed:
            last_step, last_event = self.completed[-1]
            if env_step != last_step + 1 or event <= last_event:
                raise ValueError(
                    f"non-monotone completion ({env_step}, {event}) after "
                    f"({last_step}, {last_event})"
                )
        elif env_step != 0:
            raise ValueError("first completion must be step 0")
        self.completed.append((env_step, event))

    def align(self, event: int) -> int:
        """Largest completed step whose completion event is <= ``event``."""
        if not self.completed:
            raise ValueError("empty clock map")
        result = None
        for step, done_at in self.completed:
            if done_at <= event:
                result = step
            else:
                break
        if result is None:
            raise ValueError(f"event {event} precedes episode start")
        return result

    def interval(self, env_step: int) -> tuple[int, Optional[int]]:
        """Half-open event interval [start, end) for the given step.

        ``end`` is None for the final (still open) interval.
        """
        for i, (step, done_at) in enumerate(self.completed):
            if step == env_step:
                end = self.completed[i + 1][1] if i + 1 < len(self.completed) else None
                return done_at, end
        raise KeyError(env_step)


def align(clock_map: ClockMap, event: int) -> int:
    return clock_map.align(event)


@dataclass(frozen=True)
class StageSample:
    """One cognitive-state sample: an agent entering a MAEIL stage."""

    agent: int
    event: int
    stage: str
    plan_id: Optional[int] = None
    plan_task: Optional[str] = None
    plan_status: Optional[str] = None
    plan_origin: Optional[str] = None
    plan_cursor: Optional[int] = None

    def to_json(self) -> dict[str, Any]:
        d: dict[str, Any] = {"agent": self.agent, "event": self.event, "stage": self.stage}
        if self.plan_id is not None:
            d["plan"] = {
                "id": self.plan_id,
                "task": self.plan_task,
                "status": self.plan_status,
                "origin": self.plan_origin,
                "cursor": self.plan_cursor,
            }
        return d

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "StageSample":
        plan = d.get("plan")
        return cls(
            agent=d["agent"],
            event=d["event"],
            stage=d["stage"],
            plan_id=plan["id"] if plan else None,
            plan_task=plan["task"] if plan else None,
            plan_status=plan["status"] if plan else None,
            plan_origin=plan["origin"] if plan else None,
            plan_cursor=plan["cursor"] if plan else None,
        )


@dataclass(frozen=True)
class MessageEvent:
    """A message event: one send with a recipient set."""

    sender: int
    recipients: tuple[int, ...]
    payload: str
    send_event: int
    env_step: int

    def to_json(self) -> dict[str, Any]:
        return {
            "sender": self.sender,
            "recipients": list(self.recipients),
            "payload": self.payload,
            "send_event": self.send_event,
            "env_step": self.env_step,
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "MessageEvent":
        return cls(
            sender=d["sender"],
            recipients=tuple(d["recipients"]),
            payload=d["payload"],
            send_event=d["send_event"],
            env_step=d["env_step"],
        )


@dataclass(frozen=True)
class PlanEvent:
    """Plan lifecycle event, used by the planning-dynamics metrics."""

    agent: int
    kind: str  # created_new | interrupted | resumed | replanned | terminated_success | terminated_failure
    event: int
    plan_id: int
    trigger: str = ""  # message | execution_failure | "" for non-interrupt kinds

    def to_json(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "agent": self.agent,
            "kind": self.kind,
            "event": self.event,
            "plan_id": self.plan_id,
        }
        if self.trigger:
            d["trigger"] = self.trigger
        return d

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "PlanEvent":
        return cls(
            agent=d["agent"],
            kind=d["kind"],
            event=d["event"],
            plan_id=d["plan_id"],
            trigger=d.get("trigger", ""),
        )


@dataclass(frozen=True)
class VerdictRecord:
    """Serializable constraint verdict for one (task, step)."""

    task: str
    step: int
    spatial: bool
    temporal: bool
    participation: bool
    dependency: bool
    n_proximate: int
    n_engaged: int
    n_qualifying: int
    n_deps_satisfied: int
    n_deps_total: int

    @property
    def satisfied(self) -> list[str]:
        return [c for c, ok in self._items() if ok]

    @property
    def violated(self) -> list[str]:
        return [c for c, ok in self._items() if not ok]

    def _items(self) -> list[tuple[str, bool]]:
        return [
            ("spatial", self.spatial),
            ("temporal", self.temporal),
            ("participation", self.participation),
            ("dependency", self.dependency),
        ]

    @property
    def coop(self) -> bool:
        return self.spatial and self.temporal and self.participation and self.dependency

    def to_json(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "step": self.step,
            "spatial": self.spatial,
            "temporal": self.temporal,
            "participation": self.participation,
            "dependency": self.dependency,
            "counts": {
                "proximate": self.n_proximate,
                "engaged": self.n_engaged,
                "qualifying": self.n_qualifying,
                "deps_satisfied": self.n_deps_satisfied,
                "deps_total": self.n_deps_total,
            },
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "VerdictRecord":
        c = d["counts"]
        return cls(
            task=d["task"],
            step=d["step"],
            spatial=d["spatial"],
            temporal=d["temporal"],
            participation=d["participation"],
            dependency=d["dependency"],
            n_proximate=c["proximate"],
            n_engaged=c["engaged"],
            n_qualifying=c["qualifying"],
            n_deps_satisfied=c["deps_satisfied"],
            n_deps_total=c["deps_total"],
        )


@dataclass(frozen=True)
class AlignedStepLog:
    """One environment transition paired with its preceding cognitive interval."""

    env_step: int
    cognitive_events: tuple[StageSample, ...]
    messages: tuple[MessageEvent, ...]
    plan_events: tuple[PlanEvent, ...]
    state_before: dict[str, Any]
    joint_action: dict[str, Any]
    state_after: dict[str, Any]
    verdicts: tuple[VerdictRecord, ...]
    plan_snapshot: dict[str, str]  # agent alias -> task spec at barrier release
    decisions: tuple[tuple[int, float], ...]  # (agent, duration) per policy call
    capability_gains: int
    interval_start_event: int
    interval_end_event: int  # completion event of step env_step + 1

    def to_json(self) -> dict[str, Any]:
        return {
            "type": "step",
            "t": self.env_step,
            "interval": [self.interval_start_event, self.interval_end_event],
            "cognitive_events": [s.to_json() for s in self.cognitive_events],
            "messages": [m.to_json() for m in self.messages],
            "plan_events": [p.to_json() for p in self.plan_events],
            "state_before": self.state_before,
            "joint_action": self.joint_action,
            "state_after": self.state_after,
            "verdicts": [v.to_json() for v in self.verdicts],
            "plan_snapshot": self.plan_snapshot,
            "decisions": [[a, d] for a, d in self.decisions],
            "capability_gains": self.capability_gains,
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "AlignedStepLog":
        return cls(
            env_step=d["t"],
            cognitive_events=tuple(StageSample.from_json(s) for s in d["cognitive_events"]),
            messages=tuple(MessageEvent.from_json(m) for m in d["messages"]),
            plan_events=tuple(PlanEvent.from_json(p) for p in d["plan_events"]),
            state_before=d["state_before"],
            joint_action=d["joint_action"],
            state_after=d["state_after"],
            verdicts=tuple(VerdictRecord.from_json(v) for v in d["verdicts"]),
            plan_snapshot=dict(d["plan_snapshot"]),
            decisions=tuple((a, dur) for a, dur in d["decisions"]),
            capability_gains=d["capability_gains"],
            interval_start_event=d["interval"][0],
            interval_end_event=d["interval"][1],
        )


@dataclass
class EpisodeRecord:
    """Full standardized episode record: header, per-step logs and outcomes."""

    header: dict[str, Any]
    entries: list[AlignedStepLog] = field(default_factory=list)
    outcomes: dict[str, bool] = field(default_factory=dict)  # task id -> Y_g
    team_success: bool = False
    termination_step: int = 0
    termination_kind: str = "truncation"  # success | truncation

    def append(self, entry: AlignedStepLog, writer: Optional["TraceWriter"] = None) -> None:
        if entry.env_step != len(self.entries):
            raise StepMismatchError(
                f"expected step {len(self.entries)}, got {entry.env_step}"
            )
        self.entries.append(entry)
        if writer is not None:
            writer.write_entry(entry)

    @property
    def n_steps(self) -> int:
        return len(self.entries)

    def satisfied_series(self) -> list[dict[str, list[str]]]:
        return [{v.task: v.satisfied for v in e.verdicts} for e in self.entries]

    def violated_series(self) -> list[dict[str, list[str]]]:
        return [{v.task: v.violated for v in e.verdicts} for e in self.entries]

    def stage_samples(self) -> Iterator[StageSample]:
        for e in self.entries:
            yield from e.cognitive_events

    def message_events(self) -> Iterator[MessageEvent]:
        for e in self.entries:
            yield from e.messages

    def plan_events(self) -> Iterator[PlanEvent]:
        for e in self.entries:
            yield from e.plan_events

    def clock_map(self) -> ClockMap:
        cm = ClockMap()
        if self.entries:
            cm.mark_completed(0, self.entries[0].interval_start_event)
            for e in self.entries:
                cm.mark_completed(e.env_step + 1, e.interval_end_event)
        else:
            cm.mark_completed(0, 0)
        return cm

    def primitive_trajectory(self) -> "PrimitiveTrajectory":
        states = [e.state_before for e in self.entries]
        if self.entries:
            states.append(self.entries[-1].state_after)
        actions = [e.joint_action for e in self.entries]
        return PrimitiveTrajectory(states=states, actions=actions)

    def end_json(self) -> dict[str, Any]:
        return {
            "type": "end",
            "outcomes": self.outcomes,
            "team_success": self.team_success,
            "termination_step": self.termination_step,
            "termination_kind": self.termination_kind,
        }


@dataclass
class PrimitiveTrajectory:
    """State/action trajectory view assembled from an episode record."""

    states: list[dict[str, Any]]
    actions: list[dict[str, Any]]

    @property
    def horizon(self) -> int:
        return len(self.actions)


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class TraceWriter:
    """Streaming line-delimited JSON trace writer.

    One header line, one line per aligned step log, one end line with the
    episode outcomes.  Output is byte-deterministic for identical inputs.
    """

    def __init__(self, stream: io.TextIOBase, header: dict[str, Any]):
        self._stream = stream
        full = {"type": "header", "schema_version": TRACE_SCHEMA_VERSION}
        full.update(header)
        self._stream.write(_dumps(full) + "\n")

    def write_entry(self, entry: AlignedStepLog) -> None:
        self._stream.write(_dumps(entry.to_json()) + "\n")

    def finish(self, record: EpisodeRecord) -> None:
        self._stream.write(_dumps(record.end_json()) + "\n")


def write_trace(record: EpisodeRecord, stream: io.TextIOBase) -> None:
    writer = TraceWriter(stream, record.header)
    for entry in record.entries:
        writer.write_entry(entry)
    writer.finish(record)


def dump_trace(record: EpisodeRecord) -> str:
    buf = io.StringIO()
    write_trace(record, buf)
    return buf.getvalue()


def parse_trace(stream: io.TextIOBase) -> EpisodeRecord:
    lines = [ln for ln in stream.read().splitlines() if ln.strip()]
    if not lines:
        raise TraceSchemaError("empty trace file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TraceSchemaError(f"bad header line: {exc}") from exc
    if header.get("type") != "header":
        raise TraceSchemaError("first line is not a trace header")
    if header.get("schema_version") != TRACE_SCHEMA_VERSION:
        raise TraceSchemaError(f"unsupported schema {header.get('schema_version')!r}")
    header = {k: v for k, v in header.items() if k != "type"}
    record = EpisodeRecord(header=header)
    saw_end = False
    for ln in lines[1:]:
        try:
            d = json.loads(ln)
        except json.JSONDecodeError as exc:
            raise TraceSchemaError(f"bad trace line: {exc}") from exc
        kind = d.get("type")
        if kind == "step":
            record.append(AlignedStepLog.from_json(d))
        elif kind == "end":
            record.outcomes = dict(d["outcomes"])
            record.team_success = d["team_success"]
            record.termination_step = d["termination_step"]
            record.termination_kind = d["termination_kind"]
            saw_end = True
        else:
            raise TraceSchemaError(f"unknown trace line type {kind!r}")
    if not saw_end:
        raise TraceSchemaError("trace file has no end line")
    return record


def load_trace(path: str) -> EpisodeRecord:
    with open(path, "r", encoding="utf-8") as f:
        return parse_trace(f)


def save_trace(record: EpisodeRecord, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        write_trace(record, f)
