"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import pytest

from emcoop.harness import RunConfig, run
from emcoop.kernel import (
    AlignedStepLog,
    EpisodeRecord,
    MessageEvent,
    PlanEvent,
    StageSample,
    VerdictRecord,
)


def run_cfg(**kw):
    """Run one episode from keyword config, returning its record."""
    return run(RunConfig(**kw))


def make_entry(
    env_step: int,
    *,
    cognitive_events=(),
    messages=(),
    plan_events=(),
    verdicts=(),
    plan_snapshot=None,
    decisions=(),
    capability_gains=0,
    state_before=None,
    joint_action=None,
    state_after=None,
    interval=None,
):
    """Hand-built aligned step log with sane defaults for metric tests."""
    start, end = interval if interval else (env_step * 10, env_step * 10 + 10)
    return AlignedStepLog(
        env_step=env_step,
        cognitive_events=tuple(cognitive_events),
        messages=tuple(messages),
        plan_events=tuple(plan_events),
        state_before=state_before or {"t": env_step},
        joint_action=joint_action or {},
        state_after=state_after or {"t": env_step + 1},
        verdicts=tuple(verdicts),
        plan_snapshot=dict(plan_snapshot or {}),
        decisions=tuple(decisions),
        capability_gains=capability_gains,
        interval_start_event=start,
        interval_end_event=end,
    )


def stage_samples(agent: int, stages: list[str], start_event: int = 1):
    return tuple(
        StageSample(agent=agent, event=start_event + i, stage=s)
        for i, s in enumerate(stages)
    )


def make_record(entries, n_agents: int = 3, **header_extra) -> EpisodeRecord:
    header = {"env": "craftlite", "n_agents": n_agents}
    header.update(header_extra)
    rec = EpisodeRecord(header=header)
    for e in entries:
        rec.append(e)
    rec.termination_step = len(entries)
    return rec


# A small cross-env scripted corpus shared by validator and metric tests.
CORPUS_CONFIGS = [
    dict(env="cube", difficulty="easy", n_agents=2, topology="individual",
         backend="idler", seed=1, max_steps=10),
    dict(env="cube", difficulty="hard", n_agents=3, topology="debate",
         backend="random-walker", seed=2, max_steps=15),
    dict(env="cube", difficulty="hard", n_agents=3, topology="centralized",
         backend="oracle-coordinator", seed=3, max_steps=60),
    dict(env="cube", difficulty="auto", n_agents=4, topology="decentralized",
         backend="random-walker", seed=4, max_steps=15),
    dict(env="craftlite", difficulty="easy", n_agents=2, topology="individual",
         backend="greedy-collector", seed=5, max_steps=20),
    dict(env="craftlite", difficulty="easy", n_agents=3, topology="centralized",
         backend="random-walker", seed=6, max_steps=15),
    dict(env="craftlite", difficulty="hard", n_agents=3, topology="debate",
         backend="follow-feedback", seed=7, max_steps=25),
    dict(env="craftlite", difficulty="hard", n_agents=4, topology="decentralized",
         backend="oracle-coordinator", seed=8, max_steps=40),
    dict(env="craftlite", difficulty="hard", n_agents=3, topology="centralized",
         backend="follow-feedback", seed=9, max_steps=25, feedback=False),
]


@pytest.fixture(scope="session")
def corpus():
    """Label -> EpisodeRecord across envs, difficulties, topologies, backends."""
    out = {}
    for kw in CORPUS_CONFIGS:
        label = "{env}-{difficulty}-{topology}-{backend}-s{seed}".format(**kw)
        out[label] = run_cfg(**kw)
    return out


__all__ = [
    "run_cfg",
    "make_entry",
    "make_record",
    "stage_samples",
    "MessageEvent",
    "PlanEvent",
    "StageSample",
    "VerdictRecord",
]
