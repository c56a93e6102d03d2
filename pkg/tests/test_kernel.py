"""Dual-clock alignment, aliases and trace serialization."""

import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_entry, make_record, run_cfg, stage_samples
from emcoop.kernel import (
    TRACE_SCHEMA_VERSION,
    ClockMap,
    EpisodeRecord,
    StepMismatchError,
    TraceSchemaError,
    agent_alias,
    align,
    dump_trace,
    load_trace,
    parse_trace,
    parse_agent_alias,
    save_trace,
)


class TestAliases:
    def test_round_trip(self):
        for a in (0, 3, 17):
            assert parse_agent_alias(agent_alias(a)) == a

    def test_alias_form(self):
        assert agent_alias(2) == "agent_2"

    def test_parse_rejects_non_alias(self):
        with pytest.raises(ValueError):
            parse_agent_alias("robot_2")


class TestClockMap:
    def make(self):
        cm = ClockMap()
        cm.mark_completed(0, 0)
        cm.mark_completed(1, 7)
        return cm

    def test_align_mid_interval(self):
        assert self.make().align(3) == 0

    def test_align_on_boundary_is_inclusive(self):
        assert self.make().align(7) == 1

    def test_align_at_start(self):
        assert self.make().align(0) == 0

    def test_align_module_function(self):
        assert align(self.make(), 5) == 0

    def test_interval_partition(self):
        cm = self.make()
        assert cm.interval(0) == (0, 7)
        assert cm.interval(1) == (7, None)
        with pytest.raises(KeyError):
            cm.interval(2)

    def test_first_completion_must_be_step_zero(self):
        cm = ClockMap()
        with pytest.raises(ValueError):
            cm.mark_completed(1, 4)

    def test_non_monotone_rejected(self):
        cm = self.make()
        with pytest.raises(ValueError):
            cm.mark_completed(2, 7)  # event must strictly increase
        with pytest.raises(ValueError):
            cm.mark_completed(3, 99)  # step must increase by one

    def test_empty_map_rejects_align(self):
        with pytest.raises(ValueError):
            ClockMap().align(0)

    @given(st.lists(st.integers(min_value=1, max_value=50), min_size=1, max_size=20))
    def test_align_is_monotone_step_function(self, gaps):
        cm = ClockMap()
        cm.mark_completed(0, 0)
        event = 0
        for step, gap in enumerate(gaps, start=1):
            event += gap
            cm.mark_completed(step, event)
        last = -1
        for e in range(event + 2):
            step = cm.align(e)
            assert step >= last
            # align(e) is the largest completed step with completion <= e
            assert cm.completed[step][1] <= e
            if step + 1 < len(cm.completed):
                assert cm.completed[step + 1][1] > e
            last = step


class TestEpisodeRecord:
    def test_append_enforces_step_order(self):
        rec = EpisodeRecord(header={"n_agents": 1})
        rec.append(make_entry(0))
        with pytest.raises(StepMismatchError):
            rec.append(make_entry(2))

    def test_clock_map_from_entries(self):
        rec = make_record([make_entry(0, interval=(0, 4)), make_entry(1, interval=(4, 9))])
        cm = rec.clock_map()
        assert cm.completed == [(0, 0), (1, 4), (2, 9)]

    def test_primitive_trajectory_shapes(self):
        rec = make_record([make_entry(0), make_entry(1), make_entry(2)])
        traj = rec.primitive_trajectory()
        assert traj.horizon == 3
        assert len(traj.states) == 4


class TestTraceSerialization:
    def test_round_trip_identity_on_real_episode(self, tmp_path):
        rec = run_cfg(env="craftlite", difficulty="easy", n_agents=2,
                      topology="centralized", backend="random-walker",
                      seed=11, max_steps=8)
        text = dump_trace(rec)
        reparsed = parse_trace(io.StringIO(text))
        assert dump_trace(reparsed) == text
        path = tmp_path / "ep.jsonl"
        save_trace(rec, str(path))
        assert dump_trace(load_trace(str(path))) == text

    def test_header_carries_schema_version(self):
        rec = run_cfg(env="cube", difficulty="easy", n_agents=1,
                      topology="individual", backend="idler", seed=0, max_steps=2)
        text = dump_trace(rec)
        assert TRACE_SCHEMA_VERSION in text.splitlines()[0]

    def test_empty_stream_rejected(self):
        with pytest.raises(TraceSchemaError):
            parse_trace(io.StringIO(""))

    def test_malformed_header_rejected(self):
        with pytest.raises(TraceSchemaError):
            parse_trace(io.StringIO("not json\n"))

    def test_wrong_first_line_type_rejected(self):
        with pytest.raises(TraceSchemaError):
            parse_trace(io.StringIO('{"type": "step"}\n'))

    def test_round_trip_preserves_events(self):
        samples = stage_samples(0, ["R", "W", "X"])
        rec = make_record([make_entry(0, cognitive_events=samples)], n_agents=1)
        rec.team_success = True
        rec.termination_kind = "success"
        back = parse_trace(io.StringIO(dump_trace(rec)))
        assert list(back.stage_samples()) == list(samples)
        assert back.team_success is True
        assert back.termination_kind == "success"
