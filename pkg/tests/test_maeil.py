"""Stage machine, episode loop scheduling and trace validators."""

from itertools import product

import pytest

from conftest import make_entry, make_record, run_cfg, stage_samples
from emcoop.agents.base import PlanDecision, Policy
from emcoop.agents.scripted import make_scripted_policy
from emcoop.comm import Topology
from emcoop.envs.cube import CubeEnv
from emcoop.kernel import PlanEvent
from emcoop.maeil import (
    EVENT_BUDGET_PER_INTERVAL,
    LEGAL_EDGES,
    STAGES,
    TRANSITIONS,
    CognitiveState,
    DeadlockError,
    EpisodeLoop,
    IllegalTransitionError,
    ready,
    run_episode_loop,
    transition,
    validate_barrier_safety,
    validate_interrupt_completeness,
    validate_record,
    validate_stage_legality,
)

TRIGGERS = sorted({t for _, t in TRANSITIONS})


class TestStageMachine:
    def test_transition_table_exhaustive(self):
        for stage, trigger in product(STAGES, TRIGGERS):
            if (stage, trigger) in TRANSITIONS:
                assert transition(stage, trigger) == TRANSITIONS[(stage, trigger)]
            else:
                with pytest.raises(IllegalTransitionError):
                    transition(stage, trigger)

    def test_unknown_stage_rejected(self):
        with pytest.raises(IllegalTransitionError):
            transition("Z", "plan_committed")

    def test_transition_images_are_legal_edges(self):
        for (stage, _), nxt in TRANSITIONS.items():
            assert (stage, nxt) in LEGAL_EDGES

    def test_ready_requires_all_at_barrier(self):
        states = {a: CognitiveState(a, stage="W") for a in range(3)}
        assert ready(states)
        states[1].stage = "X"
        assert not ready(states)


class TestEventBudget:
    def test_budget_overflow_raises_deadlock(self):
        env = CubeEnv.generate("easy", 1, seed=0)
        loop = EpisodeLoop(env, {0: make_scripted_policy("idler", 0, 0)},
                           Topology("individual", 1))
        for _ in range(EVENT_BUDGET_PER_INTERVAL):
            loop._next_event(0)
        with pytest.raises(DeadlockError):
            loop._next_event(0)


class _WaitPolicy(Policy):
    """Commits to a multi-step wait so messages arrive mid-plan."""

    def plan(self, ctx):
        return PlanDecision(["wait(5)"])


class TestEpisodeLoop:
    def test_single_idler_three_steps(self):
        rec = run_cfg(env="cube", difficulty="easy", n_agents=1,
                      topology="individual", backend="idler", seed=0, max_steps=3)
        assert rec.n_steps == 3
        assert all(e.joint_action == {"agent_0": "STAY"} for e in rec.entries)
        assert rec.termination_kind == "truncation"

    def test_message_interrupts_waiting_agent(self):
        # The leader replans (and re-broadcasts) every step; the follower's
        # five-step wait leaves it at the barrier when directives land.
        env = CubeEnv.generate("easy", 2, seed=3)
        policies = {0: make_scripted_policy("idler", 0, 0), 1: _WaitPolicy()}
        rec = run_episode_loop(env, policies, Topology("centralized", 2, leader=0),
                               max_steps=4)
        stages_1 = [s.stage for s in rec.stage_samples() if s.agent == 1]
        assert "I" in stages_1
        # every I is immediately resolved back to W
        for i, s in enumerate(stages_1):
            if s == "I":
                assert stages_1[i + 1] == "W"
        kinds = [p.kind for p in rec.plan_events() if p.agent == 1]
        assert "interrupted" in kinds and "resumed" in kinds
        assert validate_record(rec) == []

    def test_interval_order_and_clock_monotone(self):
        rec = run_cfg(env="craftlite", difficulty="easy", n_agents=3,
                      topology="debate", backend="random-walker",
                      seed=4, max_steps=10)
        prev_end = 0
        for e in rec.entries:
            assert e.interval_start_event == prev_end
            assert e.interval_end_event > e.interval_start_event
            events = [s.event for s in e.cognitive_events]
            assert events == sorted(events)
            assert all(e.interval_start_event <= ev <= e.interval_end_event
                       for ev in events)
            prev_end = e.interval_end_event

    def test_per_agent_budget_holds_in_traces(self, corpus):
        for rec in corpus.values():
            for e in rec.entries:
                per_agent = {}
                for s in e.cognitive_events:
                    per_agent[s.agent] = per_agent.get(s.agent, 0) + 1
                assert all(n <= EVENT_BUDGET_PER_INTERVAL for n in per_agent.values())


class TestValidators:
    def test_corpus_is_clean(self, corpus):
        for label, rec in corpus.items():
            assert validate_record(rec) == [], label

    def test_stage_legality_rejects_bad_first_stage(self):
        rec = make_record([make_entry(0, cognitive_events=stage_samples(0, ["W"]))])
        assert validate_stage_legality(rec)

    def test_stage_legality_rejects_illegal_edge(self):
        rec = make_record([make_entry(0, cognitive_events=stage_samples(0, ["R", "X"]))])
        assert validate_stage_legality(rec)

    def test_stage_legality_accepts_legal_sequence(self):
        rec = make_record(
            [make_entry(0, cognitive_events=stage_samples(0, ["R", "W", "X"]))]
        )
        assert validate_stage_legality(rec) == []

    def test_barrier_safety_rejects_double_execution(self):
        rec = make_record(
            [make_entry(0, cognitive_events=stage_samples(0, ["R", "W", "X", "R", "W", "X"]),
                        joint_action={"agent_0": "STAY"})]
        )
        assert validate_barrier_safety(rec)

    def test_barrier_safety_rejects_wait_after_release(self):
        rec = make_record(
            [make_entry(0, cognitive_events=stage_samples(0, ["R", "W", "X", "W"]),
                        joint_action={"agent_0": "STAY"})]
        )
        assert validate_barrier_safety(rec)

    def test_interrupt_completeness_rejects_unresolved_interrupt(self):
        samples = stage_samples(0, ["R", "W", "I", "W", "X"])
        rec = make_record([make_entry(0, cognitive_events=samples,
                                      joint_action={"agent_0": "STAY"})])
        # I sample without a matching interrupted/resumed plan-event pair
        assert validate_interrupt_completeness(rec)

    def test_interrupt_completeness_accepts_matched_pair(self):
        samples = stage_samples(0, ["R", "W", "I", "W", "X"])
        events = (
            PlanEvent(0, "interrupted", 3, 1, trigger="message"),
            PlanEvent(0, "resumed", 4, 1, trigger="message"),
        )
        rec = make_record([make_entry(0, cognitive_events=samples,
                                      plan_events=events,
                                      joint_action={"agent_0": "STAY"})])
        assert validate_interrupt_completeness(rec) == []
