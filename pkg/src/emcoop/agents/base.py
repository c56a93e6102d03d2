"""Policy interface: how an agent mind plugs into the episode loop.

Policies are invoked at three points: planning (entering R with an empty or
finished plan), interrupt resolution (a message batch arrived mid-plan), and
message composition (the topology protocol needs a payload from this agent).
Scripted policies read the environment directly; remote policies only see
``env.describe(agent)``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Optional

from ..comm import Message, Topology
from ..envs.base import Environment

RESUME = "resume"
REPLAN = "replan"


@dataclass
class PolicyContext:
    """Everything a policy sees for one invocation."""

    agent: int
    step: int
    env: Environment
    topology: Topology
    inbox: list[Message] = field(default_factory=list)
    feedback: Optional[dict[str, Any]] = None  # task id -> feedback snapshot json


@dataclass
class PlanDecision:
    concepts: list[str]


@dataclass
class InterruptDecision:
    action: str  # resume | replan
    concepts: Optional[list[str]] = None

    def __post_init__(self):
        if self.action not in (RESUME, REPLAN):
            raise ValueError(f"bad interrupt action: {self.action!r}")
        if self.action == REPLAN and not self.concepts:
            raise ValueError("replan requires a new concept list")


class Policy(ABC):
    """Base class for agent policies."""

    #: simulated wall-clock cost of the most recent invocation
    last_duration: float = 1.0

    @abstractmethod
    def plan(self, ctx: PolicyContext) -> PlanDecision:
        """Produce a fresh plan on entering R."""

    def on_interrupt(self, ctx: PolicyContext) -> InterruptDecision:
        """Resolve a mid-plan message batch; default keeps the current plan."""
        return InterruptDecision(RESUME)

    def compose_message(self, ctx: PolicyContext, purpose: str) -> str:
        """Payload for a protocol-mandated send (debate brief, report, ...)."""
        return "{}"

    def peer_messages(self, ctx: PolicyContext) -> list[tuple[list[int], str]]:
        """Voluntary sends, consulted only under the decentralized topology."""
        return []
