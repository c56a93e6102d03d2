"""Cognitive stage machine and the deterministic episode loop.

Each agent's mind cycles through four stages: R (reasoning/planning),
W (waiting at the action barrier), X (executing the committed primitive),
and I (handling a message interrupt).  The loop interleaves one cognitive
interval with each environment step: plan outcomes from the previous step
are processed first, then planning phases run in a topology-specific order,
then message interrupts are drained, and finally the barrier releases one
primitive per agent into ``env.step``.

Every stage entry consumes one index of the global event counter, so traces
reconstruct the full dual-clock alignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .agents.base import REPLAN, InterruptDecision, Policy, PolicyContext
from .comm import BudgetExceededError, MessageBuffers, Topology
from .constraints import feedback as constraint_feedback
from .envs.base import CONTINUE, DONE, FAILED, ConceptError, ConceptOutcome, Environment
from .kernel import (
    AlignedStepLog,
    EpisodeRecord,
    MessageEvent,
    PlanEvent,
    StageSample,
    TraceWriter,
    agent_alias,
)

STAGES = ("R", "W", "X", "I")

#: strict operational transitions: (stage, trigger) -> next stage
TRANSITIONS = {
    ("R", "plan_committed"): "W",
    ("W", "barrier_released"): "X",
    ("X", "execution_done"): "R",
    ("X", "execution_failed"): "R",
    ("W", "message_arrived"): "I",
    ("X", "message_arrived"): "I",
    ("I", "interrupt_resolved"): "W",
}

#: edges considered legal in a recorded stage sequence.  Beyond the images
#: of TRANSITIONS this admits X->W (the barrier re-arms while a multi-step
#: plan continues) and W->R (a committed plan with nothing left to execute
#: is routed back to planning).
LEGAL_EDGES = frozenset(
    {
        ("R", "W"),
        ("W", "X"),
        ("X", "R"),
        ("W", "I"),
        ("X", "I"),
        ("I", "W"),
        ("X", "W"),
        ("W", "R"),
    }
)

EVENT_BUDGET_PER_INTERVAL = 16


class IllegalTransitionError(Exception):
    pass


class DeadlockError(Exception):
    """An interval failed to converge within the per-agent event budget."""


def transition(stage: str, trigger: str) -> str:
    """Apply one stage-machine trigger; illegal combinations raise."""
    if stage not in STAGES:
        raise IllegalTransitionError(f"unknown stage {stage!r}")
    try:
        return TRANSITIONS[(stage, trigger)]
    except KeyError:
        raise IllegalTransitionError(f"no transition from {stage} on {trigger!r}") from None


@dataclass
class Plan:
    plan_id: int
    concepts: list[str]
    origin: str = "new"  # new | replanned
    cursor: int = 0
    status: str = "active"  # active | done | failed

    @property
    def current_concept(self) -> Optional[str]:
        if 0 <= self.cursor < len(self.concepts):
            return self.concepts[self.cursor]
        return None


@dataclass
class CognitiveState:
    agent: int
    stage: str = "R"
    plan: Optional[Plan] = None
    executor: Optional[Any] = None
    pending: Optional[ConceptOutcome] = None
    replan_trigger: str = ""  # set when the next plan is a forced replan
    interval_events: int = 0


def ready(states: dict[int, CognitiveState]) -> bool:
    """All agents are parked at the barrier."""
    return all(s.stage == "W" for s in states.values())


class EpisodeLoop:
    """Deterministic round-robin scheduler over one episode."""

    def __init__(
        self,
        env: Environment,
        policies: dict[int, Policy],
        topology: Topology,
        max_steps: Optional[int] = None,
        feedback_enabled: bool = True,
        header: Optional[dict[str, Any]] = None,
        writer: Optional[TraceWriter] = None,
    ):
        self.env = env
        self.policies = policies
        self.topology = topology
        self.max_steps = max_steps if max_steps is not None else env.max_steps
        self.feedback_enabled = feedback_enabled and env.feedback_enabled
        self.buffers = MessageBuffers(topology)
        self.states = {a: CognitiveState(a) for a in range(env.n_agents)}
        self.record = EpisodeRecord(header=header or {})
        self.writer = writer
        self.event = 0  # step 0 completes at event 0
        self.plan_counter = 0
        self.step_index = 0
        self.feedback_view: Optional[dict[str, Any]] = None
        self._samples: list[StageSample] = []
        self._plan_events: list[PlanEvent] = []
        self._messages: list[MessageEvent] = []
        self._decisions: list[tuple[int, float]] = []

    # -- event bookkeeping ----------------------------------------------

    def _next_event(self, agent: int) -> int:
        st = self.states[agent]
        st.interval_events += 1
        if st.interval_events > EVENT_BUDGET_PER_INTERVAL:
            raise DeadlockError(
                f"agent_{agent} exceeded {EVENT_BUDGET_PER_INTERVAL} events in "
                f"interval of step {self.step_index}"
            )
        self.event += 1
        return self.event

    def _emit(self, st: CognitiveState) -> None:
        plan = st.plan
        self._samples.append(
            StageSample(
                agent=st.agent,
                event=self._next_event(st.agent),
                stage=st.stage,
                plan_id=plan.plan_id if plan else None,
                plan_task=plan.current_concept if plan else None,
                plan_status=plan.status if plan else None,
                plan_origin=plan.origin if plan else None,
                plan_cursor=plan.cursor if plan else None,
            )
        )

    def _step_stage(self, st: CognitiveState, trigger: str) -> None:
        st.stage = transition(st.stage, trigger)
        self._emit(st)

    def _force_stage(self, st: CognitiveState, stage: str) -> None:
        if (st.stage, stage) not in LEGAL_EDGES:
            raise IllegalTransitionError(f"illegal edge {st.stage}->{stage}")
        st.stage = stage
        self._emit(st)

    # -- policy invocation ------------------------------------------------

    def _ctx(self, agent: int, inbox=None) -> PolicyContext:
        return PolicyContext(
            agent=agent,
            step=self.step_index,
            env=self.env,
            topology=self.topology,
            inbox=list(inbox or []),
            feedback=self.feedback_view,
        )

    def _invoke(self, agent: int, method: str, *args) -> Any:
        policy = self.policies[agent]
        policy.last_duration = 1.0
        result = getattr(policy, method)(*args)
        self._decisions.append((agent, float(policy.last_duration)))
        return result

    def _send(self, sender: int, recipients: list[int], payload: str) -> bool:
        try:
            msg = self.buffers.send(sender, recipients, payload, self.event, self.step_index)
        except BudgetExceededError:
            return False
        self._messages.append(
            MessageEvent(
                sender=sender,
                recipients=tuple(msg.recipients),
                payload=msg.payload,
                send_event=self.event,
                env_step=self.step_index,
            )
        )
        return True

    # -- interval phases ----------------------------------------------------

    def _process_outcomes(self) -> None:
        for a in sorted(self.states):
            st = self.states[a]
            if st.stage != "X" or st.pending is None:
                continue
            out, st.pending = st.pending, None
            if out.status == CONTINUE:
                self._force_stage(st, "W")
            elif out.status == DONE:
                st.plan.cursor += 1
                st.executor = None
                if st.plan.current_concept is not None:
                    self._force_stage(st, "W")
                else:
                    st.plan.status = "done"
                    self._plan_events.append(
                        PlanEvent(a, "terminated_success", self.event, st.plan.plan_id)
                    )
                    self._step_stage(st, "execution_done")
            else:  # FAILED
                st.plan.status = "failed"
                st.executor = None
                self._plan_events.append(
                    PlanEvent(
                        a, "terminated_failure", self.event, st.plan.plan_id,
                        trigger="execution_failure",
                    )
                )
                st.replan_trigger = "execution_failure"
                self._step_stage(st, "execution_failed")

    def _commit_plan(self, agent: int, concepts: list[str]) -> None:
        st = self.states[agent]
        self.plan_counter += 1
        if not concepts:
            concepts = [self.env.noop_concept()]
        origin = "replanned" if st.replan_trigger else "new"
        st.plan = Plan(self.plan_counter, list(concepts), origin=origin)
        st.executor = None
        self._step_stage(st, "plan_committed")
        kind = "replanned" if st.replan_trigger else "created_new"
        self._plan_events.append(
            PlanEvent(agent, kind, self.event, st.plan.plan_id, trigger=st.replan_trigger)
        )
        st.replan_trigger = ""

    def _plan_agent(self, agent: int, inbox) -> None:
        decision = self._invoke(agent, "plan", self._ctx(agent, inbox))
        self._commit_plan(agent, decision.concepts)

    def _compose(self, agent: int, purpose: str, inbox=None) -> str:
        return self._invoke(agent, "compose_message", self._ctx(agent, inbox), purpose)

    def _phase_planning(self) -> None:
        kind = self.topology.kind
        agents = sorted(self.states)
        if kind == "individual":
            for a in agents:
                if self.states[a].stage == "R":
                    self._plan_agent(a, self.buffers.read_all(a))
        elif kind == "debate":
            order = list(self.topology.order)
            for idx, a in enumerate(order):
                if self.states[a].stage != "R":
                    continue
                inbox = self.buffers.read_all(a)
                later = order[idx + 1:]
                if later:
                    self._send(a, later, self._compose(a, "debate", inbox))
                self._plan_agent(a, inbox)
        elif kind == "centralized":
            leader = self.topology.leader
            followers = [a for a in agents if a != leader]
            leader_plans = self.states[leader].stage == "R"
            if leader_plans and followers:
                self._send(leader, followers, self._compose(leader, "directive"))
            for f in followers:
                if self.states[f].stage != "R":
                    continue
                inbox = self.buffers.read_all(f)
                self._send(f, [leader], self._compose(f, "report", inbox))
                self._plan_agent(f, inbox)
            if leader_plans:
                self._plan_agent(leader, self.buffers.read_all(leader))
        elif kind == "decentralized":
            for a in agents:
                if self.states[a].stage != "R":
                    continue
                inbox = self.buffers.read_all(a)
                for recipients, payload in self._invoke(a, "peer_messages", self._ctx(a, inbox)):
                    self._send(a, list(recipients), payload)
                self._plan_agent(a, inbox)
        else:
            raise ValueError(f"unknown topology kind {kind!r}")

    def _resolve_interrupt(self, agent: int) -> None:
        st = self.states[agent]
        msgs = self.buffers.read_all(agent)
        self._step_stage(st, "message_arrived")
        self._plan_events.append(
            PlanEvent(agent, "interrupted", self.event, st.plan.plan_id, trigger="message")
        )
        decision: InterruptDecision = self._invoke(
            agent, "on_interrupt", self._ctx(agent, msgs)
        )
        if decision.action == REPLAN:
            self.plan_counter += 1
            st.plan = Plan(
                self.plan_counter,
                list(decision.concepts or [self.env.noop_concept()]),
                origin="replanned",
            )
            st.executor = None
            self._step_stage(st, "interrupt_resolved")
            self._plan_events.append(
                PlanEvent(agent, "replanned", self.event, st.plan.plan_id, trigger="message")
            )
            st.replan_trigger = ""
        else:
            self._step_stage(st, "interrupt_resolved")
            self._plan_events.append(
                PlanEvent(agent, "resumed", self.event, st.plan.plan_id, trigger="message")
            )

    def _interrupt_sweep(self) -> None:
        while True:
            pending = [
                a
                for a in sorted(self.states)
                if self.states[a].stage in ("W", "X") and self.buffers.has_unread(a)
            ]
            if not pending:
                return
            for a in pending:
                self._resolve_interrupt(a)

    def _barrier(self) -> tuple[dict[int, Any], dict[str, str]]:
        actions: dict[int, Any] = {}
        snapshot: dict[str, str] = {}
        for a in sorted(self.states):
            st = self.states[a]
            if st.stage != "W":
                raise DeadlockError(
                    f"agent_{a} is in {st.stage}, not at the barrier, at step {self.step_index}"
                )
            self._step_stage(st, "barrier_released")
            concept = st.plan.current_concept
            snapshot[agent_alias(a)] = concept or ""
            try:
                if st.executor is None:
                    st.executor = self.env.compile(a, concept)
                actions[a] = st.executor.propose(self.env, a)
            except ConceptError as exc:
                actions[a] = self.env.noop_action()
                st.pending = ConceptOutcome(FAILED, str(exc))
        return actions, snapshot

    def _update_feedback(self, info) -> None:
        if not self.feedback_enabled:
            self.feedback_view = None
            return
        by_id = {t.task_id: t for t in self.env.all_tasks()}
        view: dict[str, Any] = {}
        for verdict in info.verdicts:
            task = by_id.get(verdict.task)
            if task is None:
                continue
            snap = constraint_feedback(task, verdict, info.capabilities, enabled=True)
            view[verdict.task] = snap.to_json()
        self.feedback_view = view

    # -- main loop ------------------------------------------------------

    def run(self) -> EpisodeRecord:
        first_interval = True
        terminated = False
        for i in range(self.max_steps):
            self.step_index = i
            interval_start = self.event
            self._samples = []
            self._plan_events = []
            self._messages = []
            self._decisions = []
            for st in self.states.values():
                st.interval_events = 0

            if first_interval:
                for a in sorted(self.states):
                    self._emit(self.states[a])  # initial R samples
                first_interval = False

            self._process_outcomes()
            self.buffers.begin_step()
            self._phase_planning()
            self._interrupt_sweep()
            actions, snapshot = self._barrier()

            info = self.env.step(actions)
            self.event += 1  # completion event of step i + 1

            for a in sorted(self.states):
                st = self.states[a]
                if st.pending is None:
                    st.pending = st.executor.after_step(self.env, a)

            self._update_feedback(info)

            entry = AlignedStepLog(
                env_step=i,
                cognitive_events=tuple(self._samples),
                messages=tuple(self._messages),
                plan_events=tuple(self._plan_events),
                state_before=info.state_before,
                joint_action={agent_alias(a): actions[a] for a in sorted(actions)},
                state_after=info.state_after,
                verdicts=tuple(info.verdicts),
                plan_snapshot=snapshot,
                decisions=tuple(self._decisions),
                capability_gains=info.capability_gains,
                interval_start_event=interval_start,
                interval_end_event=self.event,
            )
            self.record.append(entry, writer=self.writer)

            if self.env.team_success:
                terminated = True
                self.record.termination_step = i + 1
                self.record.termination_kind = "success"
                break

        if not terminated:
            self.record.termination_step = self.record.n_steps
            self.record.termination_kind = "truncation"
        self.record.outcomes = self.env.outcomes()
        self.record.team_success = self.env.team_success
        if self.writer is not None:
            self.writer.finish(self.record)
        return self.record


def run_episode_loop(
    env: Environment,
    policies: dict[int, Policy],
    topology: Topology,
    max_steps: Optional[int] = None,
    feedback_enabled: bool = True,
    header: Optional[dict[str, Any]] = None,
    writer: Optional[TraceWriter] = None,
) -> EpisodeRecord:
    return EpisodeLoop(
        env, policies, topology, max_steps=max_steps,
        feedback_enabled=feedback_enabled, header=header, writer=writer,
    ).run()


# -- trace validation --------------------------------------------------------


def validate_stage_legality(record: EpisodeRecord) -> list[str]:
    """Per-agent stage sequences must follow the legal edge set."""
    violations = []
    last: dict[int, str] = {}
    for sample in record.stage_samples():
        prev = last.get(sample.agent)
        if prev is None:
            if sample.stage != "R":
                violations.append(
                    f"agent_{sample.agent} first sample is {sample.stage}, not R"
                )
        elif (prev, sample.stage) not in LEGAL_EDGES:
            violations.append(
                f"agent_{sample.agent} illegal edge {prev}->{sample.stage} "
                f"at event {sample.event}"
            )
        last[sample.agent] = sample.stage
    return violations


def validate_barrier_safety(record: EpisodeRecord) -> list[str]:
    """Exactly one X entry per agent per interval, after every W of that interval."""
    violations = []
    for entry in record.entries:
        x_seen: dict[int, int] = {}
        for sample in entry.cognitive_events:
            if sample.stage == "X":
                x_seen[sample.agent] = x_seen.get(sample.agent, 0) + 1
            elif sample.stage == "W" and x_seen.get(sample.agent):
                violations.append(
                    f"step {entry.env_step}: agent_{sample.agent} entered W after "
                    "its barrier release"
                )
        for agent, n in x_seen.items():
            if n != 1:
                violations.append(
                    f"step {entry.env_step}: agent_{agent} has {n} X samples"
                )
        acted = set(x_seen)
        for alias in entry.joint_action:
            aid = int(alias.split("_")[1])
            if aid not in acted:
                violations.append(
                    f"step {entry.env_step}: agent_{aid} acted without an X sample"
                )
    return violations


def validate_interrupt_completeness(record: EpisodeRecord) -> list[str]:
    """Every I entry resolves to W, and matches interrupted->resumed/replanned."""
    violations = []
    for entry in record.entries:
        by_agent: dict[int, list[str]] = {}
        for sample in entry.cognitive_events:
            by_agent.setdefault(sample.agent, []).append(sample.stage)
        for agent, stages in by_agent.items():
            for j, stage in enumerate(stages):
                if stage == "I":
                    if j + 1 >= len(stages) or stages[j + 1] != "W":
                        violations.append(
                            f"step {entry.env_step}: agent_{agent} interrupt "
                            "not resolved to W"
                        )
        interrupted = sum(1 for p in entry.plan_events if p.kind == "interrupted")
        resolved = sum(
            1
            for p in entry.plan_events
            if p.kind in ("resumed", "replanned") and p.trigger == "message"
        )
        if interrupted != resolved:
            violations.append(
                f"step {entry.env_step}: {interrupted} interrupts but "
                f"{resolved} resolutions"
            )
        i_samples = sum(
            1 for s in entry.cognitive_events if s.stage == "I"
        )
        if i_samples != interrupted:
            violations.append(
                f"step {entry.env_step}: {i_samples} I samples vs "
                f"{interrupted} interrupted events"
            )
    return violations


def validate_record(record: EpisodeRecord) -> list[str]:
    return (
        validate_stage_legality(record)
        + validate_barrier_safety(record)
        + validate_interrupt_completeness(record)
    )
