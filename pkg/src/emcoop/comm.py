"""Communication topologies, message buffers and budget enforcement.

Four topologies are supported: individual (no edges), debate (speakers in a
fixed order, each broadcasting to all later speakers), centralized (a leader
connected bidirectionally to every follower) and decentralized (complete
digraph with a per-step send/receive budget).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

log = logging.getLogger(__name__)

MAX_PAYLOAD_BYTES = 4096

TOPOLOGY_KINDS = ("individual", "debate", "centralized", "decentralized")


class CommError(Exception):
    pass


class NoEdgeError(CommError):
    """Sender/recipient pair is not an edge of the topology graph."""


class SelfSendError(CommError):
    pass


class BudgetExceededError(CommError):
    """Decentralized per-step send budget exhausted."""


@dataclass(frozen=True)
class Topology:
    kind: str
    n_agents: int
    leader: int = 0
    order: Optional[tuple[int, ...]] = None  # debate speaking order
    budget: Optional[int] = None  # decentralized per-step budget

    def __post_init__(self):
        if self.kind not in TOPOLOGY_KINDS:
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.kind == "debate" and self.order is None:
            object.__setattr__(self, "order", tuple(range(self.n_agents)))
        if self.kind == "decentralized" and self.budget is None:
            object.__setattr__(self, "budget", self.n_agents)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        agents = range(self.n_agents)
        if self.kind == "individual":
            return frozenset()
        if self.kind == "debate":
            order = self.order or tuple(agents)
            pairs = set()
            for k, speaker in enumerate(order):
                for later in order[k + 1:]:
                    pairs.add((speaker, later))
            return frozenset(pairs)
        if self.kind == "centralized":
            pairs = set()
            for a in agents:
                if a != self.leader:
                    pairs.add((self.leader, a))
                    pairs.add((a, self.leader))
            return frozenset(pairs)
        return frozenset((i, j) for i in agents for j in agents if i != j)

    def allowed_recipients(self, sender: int) -> list[int]:
        return sorted(j for (i, j) in self.edges if i == sender)

    def to_json(self) -> dict:
        d: dict = {"kind": self.kind, "n_agents": self.n_agents}
        if self.kind == "centralized":
            d["leader"] = self.leader
        if self.kind == "debate":
            d["order"] = list(self.order or ())
        if self.kind == "decentralized":
            d["budget"] = self.budget
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Topology":
        return cls(
            kind=d["kind"],
            n_agents=d["n_agents"],
            leader=d.get("leader", 0),
            order=tuple(d["order"]) if d.get("order") else None,
            budget=d.get("budget"),
        )


@dataclass
class Message:
    """A delivered message with per-recipient unread flags."""

    sender: int
    recipients: tuple[int, ...]
    payload: str
    send_event: int
    env_step: int
    unread: dict[int, bool] = field(default_factory=dict)

    def __post_init__(self):
        if not self.unread:
            self.unread = {r: True for r in self.recipients}


class MessageBuffers:
    """Per-agent FIFO buffers of delivered, unread messages.

    Decentralized receive overflow is not dropped: excess deliveries are
    deferred to the next environment step and counted against that step's
    receive budget.
    """

    def __init__(self, topology: Topology):
        self.topology = topology
        self._buffers: dict[int, list[Message]] = {i: [] for i in range(topology.n_agents)}
        self._deferred: list[tuple[int, Message]] = []
        self._sends_this_step: dict[int, int] = {}
        self._receives_this_step: dict[int, int] = {}
        self.total_message_events = 0

    def begin_step(self) -> None:
        """Reset per-step budget counters and flush deferred deliveries."""
        self._sends_this_step = {}
        self._receives_this_step = {}
        deferred, self._deferred = self._deferred, []
        for recipient, msg in deferred:
            self._deliver(recipient, msg)

    def _deliver(self, recipient: int, msg: Message) -> None:
        budget = self.topology.budget
        if self.topology.kind == "decentralized" and budget is not None:
            if self._receives_this_step.get(recipient, 0) >= budget:
                log.debug("receive budget full for agent %d; deferring delivery", recipient)
                self._deferred.append((recipient, msg))
                return
            self._receives_this_step[recipient] = self._receives_this_step.get(recipient, 0) + 1
        self._buffers[recipient].append(msg)

    def send(self, sender: int, recipients: list[int], payload: str,
             send_event: int, env_step: int) -> Message:
        if sender in recipients:
            raise SelfSendError(f"agent {sender} cannot message itself")
        if not recipients:
            raise ValueError("recipient set must be nonempty")
        edges = self.topology.edges
        for r in recipients:
            if (sender, r) not in edges:
                raise NoEdgeError(f"({sender} -> {r}) not permitted under {self.topology.kind}")
        budget = self.topology.budget
        if self.topology.kind == "decentralized" and budget is not None:
            if self._sends_this_step.get(sender, 0) + 1 > budget:
                raise BudgetExceededError(
                    f"agent {sender} exceeded send budget {budget} this step"
                )
            self._sends_this_step[sender] = self._sends_this_step.get(sender, 0) + 1
        if len(payload.encode("utf-8")) > MAX_PAYLOAD_BYTES:
            log.warning("payload truncated to %d bytes", MAX_PAYLOAD_BYTES)
            payload = payload.encode("utf-8")[:MAX_PAYLOAD_BYTES].decode("utf-8", "ignore")
        msg = Message(
            sender=sender,
            recipients=tuple(sorted(recipients)),
            payload=payload,
            send_event=send_event,
            env_step=env_step,
        )
        for r in msg.recipients:
            self._deliver(r, msg)
        self.total_message_events += 1
        return msg

    def has_unread(self, agent: int) -> bool:
        return bool(self._buffers[agent])

    def read_all(self, agent: int) -> list[Message]:
        """Drain the buffer in FIFO order, clearing unread flags."""
        msgs = self._buffers[agent]
        self._buffers[agent] = []
        for m in msgs:
            m.unread[agent] = False
        return msgs
