import csv
import io
from fractions import Fraction

import pytest

from dsn_scheduler.core import Resource, TimeGrid
from dsn_scheduler.exceptions import ParseError
from dsn_scheduler.milp import Schedule, Track, build_model, extract_schedule, make_track
from dsn_scheduler.reports import (
    RunManifest,
    dump_solution,
    gantt_rows,
    heatmap_csv,
    parse_solution_file,
    render_report,
    solution_to_dict,
    usage,
    usage_csv,
)
from dsn_scheduler.solve import solve_exact_oracle

from conftest import micro

WEEK = TimeGrid()
ANTENNAS = (Resource("DSS-43", "Canberra", 70), Resource("DSS-14", "Goldstone", 70, ((96, 192),)))


def _track(res, s, e, setup=0, teardown=0, mission="M", aid="A"):
    return Track((res,), (s, e), (s - setup, s), (e, e + teardown), aid, aid, mission, aid + "/v0")


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def _manifest():
    return RunManifest("micro", "abc", {"k_max": 1}, "oracle", 0, "2026-01-01T00:00:00Z")


class TestUsage:
    def test_empty_schedule(self):
        rows = {u.resource: u for u in usage(Schedule((), frozenset()), WEEK, ANTENNAS)}
        assert rows["DSS-43"].communication == 0 and rows["DSS-43"].available == 168
        assert rows["DSS-14"].communication == 0 and rows["DSS-14"].available == 144
        assert rows["DSS-14"].maintenance == 24

    def test_setup_and_teardown_occupy_the_antenna(self):
        sched = Schedule((_track("DSS-43", 8, 16, setup=4, teardown=1),), frozenset({"A"}))
        (u43, _) = usage(sched, WEEK, ANTENNAS)
        assert u43.communication == Fraction(13, 4)

    def test_hours_are_conserved(self):
        sched = Schedule((_track("DSS-14", 90, 100, setup=4, teardown=1), _track("DSS-43", 0, 8, teardown=2)),
                         frozenset({"A"}))
        for u in usage(sched, WEEK, ANTENNAS):
            assert u.total == 168
        for row in _rows(usage_csv(sched, WEEK, ANTENNAS))[1:]:
            assert row[-1] == "168.00"


class TestHeatmap:
    def test_single_two_hour_track(self):
        sched = Schedule((_track("DSS-43", 8, 16, setup=4, teardown=1),), frozenset({"A"}))
        rows = _rows(heatmap_csv(sched, WEEK, ANTENNAS))
        assert rows == [["mission", "DSS-43", "DSS-14"], ["M", "2.00", "0.00"]]

    def test_arrayed_track_counts_on_every_dish(self):
        t = Track(("DSS-43", "DSS-14"), (0, 4), (0, 0), (4, 4), "A", "A", "M", "A/v0")
        rows = _rows(heatmap_csv(Schedule((t,), frozenset({"A"})), WEEK, ANTENNAS))
        assert rows[1] == ["M", "1.00", "1.00"]


class TestGantt:
    def test_rows_are_sorted_and_disjoint_per_resource(self, corpus):
        for case in corpus:
            m = build_model(case.instance, case.registry)
            sched = extract_schedule(m, solve_exact_oracle(case.instance, case.registry).values)
            last_end = {}
            for res, _, _, setup_start, _, _, teardown_end in gantt_rows(sched):
                assert setup_start >= last_end.get(res, -1), case.name
                last_end[res] = teardown_end

    def test_header(self):
        text = render_report(parse_solution_file(dump_solution(solution_to_dict(
            micro([("A", "M", 1, 1, 0, 0)], {"A": [(("R1",), [(0, 4)])]}, horizon=4), Schedule((), frozenset()),
            _manifest()))), "gantt")
        assert text.splitlines() == ["resource,mission,activity,setup_start,track_start,track_end,teardown_end"]


class TestSolutionFile:
    INST = micro([("A", "M", 2, 2, 1, 1)], {"A": [(("R1",), [(2, 10)])]}, horizon=12, maintenance={"R1": [(11, 12)]})

    def test_round_trip(self):
        sched = Schedule((make_track(self.INST, "A/v0", 4, 6),), frozenset({"A"}))
        doc = solution_to_dict(self.INST, sched, _manifest(), metrics={"d": 1.0})
        back = parse_solution_file(dump_solution(doc))
        assert back.schedule == sched
        assert back.grid == self.INST.grid
        assert back.resources == self.INST.resources
        assert back.manifest["digest"] == _manifest().digest
        assert back.extra == {"metrics": {"d": 1.0}}

    def test_same_inputs_same_bytes(self):
        sched = Schedule((make_track(self.INST, "A/v0", 4, 6),), frozenset({"A"}))
        a = dump_solution(solution_to_dict(self.INST, sched, _manifest()))
        assert a == dump_solution(solution_to_dict(self.INST, sched, _manifest()))

    def test_digest_ignores_timestamp(self):
        later = RunManifest("micro", "abc", {"k_max": 1}, "oracle", 0, "2030-01-01T00:00:00Z")
        assert later.digest == _manifest().digest

    @pytest.mark.parametrize("text", ["nope", '{"format": "other"}', '{"format": "dsn-solution/1"}'])
    def test_rejects(self, text):
        with pytest.raises(ParseError):
            parse_solution_file(text)

    def test_unknown_kind(self):
        sol = parse_solution_file(dump_solution(solution_to_dict(self.INST, Schedule((), frozenset()), _manifest())))
        with pytest.raises(ValueError):
            render_report(sol, "pie")
