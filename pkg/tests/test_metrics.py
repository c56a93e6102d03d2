"""Metric definitions checked against hand computation and recomputation."""

import io

import pytest

from conftest import make_entry, make_record, run_cfg, stage_samples
from emcoop.kernel import MessageEvent, PlanEvent, VerdictRecord, dump_trace, parse_trace
from emcoop.metrics import (
    METRIC_NAMES,
    MetricsReport,
    NoFailureError,
    attribute_failure,
    compute,
    csv_header,
    write_csv,
)

TOL = 1e-12


def micro_trace_stage_counts():
    """Three intervals with 4, 3 and 5 cognitive samples."""
    entries = [
        make_entry(0, cognitive_events=stage_samples(0, ["R", "W", "X", "R"], 1)),
        make_entry(1, cognitive_events=stage_samples(0, ["W", "X", "R"], 5)),
        make_entry(2, cognitive_events=stage_samples(0, ["W", "I", "W", "X", "R"], 8)),
    ]
    return make_record(entries, n_agents=1)


def micro_trace_split_plans():
    """Three agents; two share a plan task, the third diverges."""
    snap = {"agent_0": "collect(tree#1)", "agent_1": "collect(tree#1)",
            "agent_2": "collect(stone#4)"}
    entries = [make_entry(i, plan_snapshot=snap) for i in range(4)]
    return make_record(entries, n_agents=3)


def micro_trace_aligned_plans():
    snap = {"agent_0": "collect(tree#1)", "agent_1": "collect(tree#1)"}
    entries = [make_entry(i, plan_snapshot=snap) for i in range(3)]
    return make_record(entries, n_agents=2)


class TestHandComputed:
    def test_m1_mean_samples_per_interval(self):
        assert abs(compute(micro_trace_stage_counts()).m1 - 4.0) <= TOL

    def test_m13_one_third_coherence(self):
        assert abs(compute(micro_trace_split_plans()).m13 - 1.0 / 3.0) <= TOL

    def test_m13_full_coherence(self):
        assert abs(compute(micro_trace_aligned_plans()).m13 - 1.0) <= TOL

    def test_m13_single_agent_is_zero(self):
        rec = make_record([make_entry(0, plan_snapshot={"agent_0": "idle()"})],
                          n_agents=1)
        assert compute(rec).m13 == 0.0

    def test_m6_counts_message_events(self):
        msg = MessageEvent(sender=0, recipients=(1, 2), payload="x",
                           send_event=2, env_step=0)
        rec = make_record([make_entry(0, messages=(msg,)),
                           make_entry(1, messages=(msg, msg))])
        assert compute(rec).m6 == 3.0

    def test_m10_m11_m12_partition(self):
        events = (
            PlanEvent(0, "created_new", 1, 1),
            PlanEvent(0, "interrupted", 2, 1, trigger="message"),
            PlanEvent(0, "resumed", 3, 1, trigger="message"),
            PlanEvent(1, "interrupted", 4, 2, trigger="message"),
            PlanEvent(1, "replanned", 5, 3, trigger="message"),
        )
        rec = make_record([make_entry(0, plan_events=events)])
        rep = compute(rec)
        assert rep.m10 == 2.0
        assert abs(rep.m11 + rep.m12 - 1.0) <= TOL

    def test_m15_to_m18_improvement_scoring(self):
        def verdict(step, prox, eng, qual, deps):
            return VerdictRecord(task="t", step=step, spatial=True, temporal=True,
                                 participation=True, dependency=True,
                                 n_proximate=prox, n_engaged=eng,
                                 n_qualifying=qual, n_deps_satisfied=deps,
                                 n_deps_total=2)
        entries = [
            make_entry(0, verdicts=(verdict(0, 0, 0, 0, 2),)),
            make_entry(1, verdicts=(verdict(1, 1, 0, 0, 2),)),  # spatial up
            make_entry(2, verdicts=(verdict(2, 1, 1, 0, 1),)),  # temporal up, dep down
        ]
        rep = compute(make_record(entries))
        assert abs(rep.m15 - 0.75) <= TOL          # up, flat
        assert abs(rep.m16 - 0.75) <= TOL          # flat, up
        assert abs(rep.m17 - 0.5) <= TOL           # flat, flat
        assert abs(rep.m18 - 0.25) <= TOL          # flat, down

    def test_empty_record_is_all_zero(self):
        assert compute(make_record([])).as_tuple() == (0.0,) * 18


class TestConsistency:
    def test_runtime_vs_recomputed_from_trace(self, corpus):
        for label, rec in corpus.items():
            runtime = compute(rec)
            reparsed = compute(parse_trace(io.StringIO(dump_trace(rec))))
            for a, b in zip(runtime.as_tuple(), reparsed.as_tuple()):
                assert abs(a - b) <= 1e-9, label

    def test_m6_equals_exact_message_total(self, corpus):
        for rec in corpus.values():
            assert compute(rec).m6 == float(sum(len(e.messages) for e in rec.entries))

    def test_csv_layout(self):
        buf = io.StringIO()
        write_csv({"a": MetricsReport(m1=2.0)}, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0].split(",") == ["label"] + list(METRIC_NAMES)
        assert lines[1].startswith("a,2.0")
        assert csv_header() == list(METRIC_NAMES)


class TestAttribution:
    def failing_record(self):
        verdicts = tuple(
            VerdictRecord(task="t", step=i, spatial=True, temporal=True,
                          participation=False, dependency=True,
                          n_proximate=2, n_engaged=1, n_qualifying=1,
                          n_deps_satisfied=0, n_deps_total=0)
            for i in range(1)
        )
        entries = [
            make_entry(i, verdicts=verdicts,
                       cognitive_events=stage_samples(0, ["R", "W", "X"], i * 4 + 1))
            for i in range(5)
        ]
        rec = make_record(entries, n_agents=1)
        rec.team_success = False
        rec.termination_step = 5
        return rec

    def test_success_raises_no_failure(self):
        rec = make_record([make_entry(0)])
        rec.team_success = True
        with pytest.raises(NoFailureError):
            attribute_failure(rec)

    def test_window_holds_last_k_stages(self):
        report = attribute_failure(self.failing_record(), k=3)
        assert report["failure_time"] == 5
        assert report["window"]["agent_0"] == ["R", "W", "X"]

    def test_histogram_counts_final_step_violations(self):
        report = attribute_failure(self.failing_record(), k=3)
        assert report["histogram"] == {"participation": 1}
        assert report["histogram_share"] == {"participation": 1.0}
        assert report["violated"] == {"t": ["participation"]}
