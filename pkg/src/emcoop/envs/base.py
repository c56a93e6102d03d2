"""Environment protocol shared by the grid worlds.

Environments own their primitive action vocabulary and their cooperative
task list.  Plans reference *concepts* (e.g. ``navigate(tree#3)``) which the
environment compiles into single-agent executors; the episode loop asks each
executor for one primitive per step and reads back an outcome afterwards.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Optional

from ..constraints import CapabilityState, Task
from ..kernel import VerdictRecord

CONTINUE = "continue"
DONE = "done"
FAILED = "failed"


class ConceptError(Exception):
    """Raised when a concept string cannot be compiled for this environment."""


CONCEPT_RE = re.compile(r"^([a-z_]+)\((.*)\)$")


def parse_concept(text: str) -> tuple[str, list[str]]:
    """Split ``kind(arg, arg)`` into its kind and raw argument strings."""
    m = CONCEPT_RE.match(text.strip())
    if not m:
        raise ConceptError(f"malformed concept: {text!r}")
    kind, raw = m.group(1), m.group(2).strip()
    args = [a.strip() for a in raw.split(",")] if raw else []
    return kind, args


def parse_object_ref(text: str) -> tuple[str, int]:
    """Parse an ``object_type#object_id`` reference."""
    if "#" not in text:
        raise ConceptError(f"expected object reference 'type#id', got {text!r}")
    kind, _, num = text.partition("#")
    try:
        return kind, int(num)
    except ValueError as e:
        raise ConceptError(f"bad object id in {text!r}") from e


@dataclass
class ConceptOutcome:
    status: str  # continue | done | failed
    reason: str = ""


class ConceptExecutor(ABC):
    """Single-agent executor for one compiled concept."""

    concept: str = ""

    @abstractmethod
    def propose(self, env: "Environment", agent: int) -> Any:
        """Primitive action for the coming step (never None; envs have a no-op)."""

    @abstractmethod
    def after_step(self, env: "Environment", agent: int) -> ConceptOutcome:
        """Outcome of the step just taken."""


@dataclass
class StepInfo:
    """Everything the episode loop records about one environment step."""

    state_before: dict[str, Any]
    state_after: dict[str, Any]
    capabilities: list[CapabilityState]
    verdicts: list[VerdictRecord]
    capability_gains: int


class Environment(ABC):
    """A seeded, fully deterministic multi-agent grid world."""

    name: str = ""
    n_agents: int = 0
    feedback_enabled: bool = True

    @classmethod
    @abstractmethod
    def generate(cls, difficulty: str, n_agents: int, seed: int, **kw) -> "Environment":
        """Build a seeded instance for the named difficulty."""

    @abstractmethod
    def noop_action(self) -> Any:
        """The primitive that leaves an agent in place."""

    @abstractmethod
    def noop_concept(self) -> str:
        """A single-step concept that compiles to the no-op primitive."""

    @abstractmethod
    def compile(self, agent: int, concept: str) -> ConceptExecutor:
        """Compile a concept string to an executor, or raise ConceptError."""

    @abstractmethod
    def step(self, actions: dict[int, Any]) -> StepInfo:
        """Advance one environment step under the joint action."""

    @abstractmethod
    def observe(self, agent: int) -> Any:
        """Agent-centric observation array."""

    @abstractmethod
    def describe(self, agent: int) -> dict[str, Any]:
        """JSON-friendly observation summary, used for remote policies."""

    @abstractmethod
    def active_tasks(self) -> list[Task]:
        """Tasks not yet done."""

    @abstractmethod
    def snapshot(self) -> dict[str, Any]:
        """JSON-friendly full state, recorded into the trace."""

    @property
    @abstractmethod
    def team_success(self) -> bool:
        """All cooperative tasks completed."""

    def outcomes(self) -> dict[str, bool]:
        return {t.task_id: t.done for t in self.all_tasks()}

    @abstractmethod
    def all_tasks(self) -> list[Task]:
        """Every task, done or not."""

    def capability_snapshot(self, actions: Optional[dict[int, Any]] = None) -> list[CapabilityState]:
        raise NotImplementedError
