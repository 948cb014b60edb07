import numpy as np
import pytest

from dsn_scheduler.core import Mission, ProblemInstance, TimeGrid
from dsn_scheduler.exceptions import DecodeError, ModelError
from dsn_scheduler.ingest import w44_2016_instance
from dsn_scheduler.milp import (
    ModelConfig,
    Schedule,
    Weights,
    assignment_vector,
    build_model,
    count_model,
    encode_schedule,
    extract_schedule,
    first_violation,
    make_track,
    objective_value,
    parse_ablation,
    schedule_to_values,
)
from dsn_scheduler.solve import solve_exact_oracle
from dsn_scheduler.splitter import expand_splits

from conftest import micro


def _vec(model, names):
    return assignment_vector(model, {n: 1 for n in names})


class TestAblationSpec:
    def test_range_and_list(self):
        assert parse_ablation("2j,2k-2m") == {"2j", "2k", "2l", "2m"}

    def test_empty(self):
        assert parse_ablation(None) == frozenset() == parse_ablation("")

    def test_unknown_tag(self):
        with pytest.raises(ModelError):
            parse_ablation("2z")


class TestStructure:
    def test_transition_rows_one_per_slot(self):
        inst = micro([("A", "M", 4, 8, 0, 0)], {"A": [(("R1",), [(0, 672)])]}, horizon=672)
        m = build_model(inst)
        assert count_model(m).n_constraints_by_tag["2c"] == 672

    def test_dense_count_before_pruning(self):
        inst = micro([("A", "M", 2, 2, 1, 1)], {"A": [(("R1",), [(0, 8)])]}, horizon=48)
        c = count_model(build_model(inst))
        assert c.n_binaries_dense == 1 + 5 * 48
        assert c.n_binaries < c.n_binaries_dense

    def test_empty_instance_counts_zero(self):
        empty = ProblemInstance(TimeGrid(15, 48), (Mission("M"),), (), (), ())
        c = count_model(build_model(empty))
        assert (c.n_binaries, c.n_binaries_dense, c.n_constraints) == (0, 0, 0)

    def test_maintenance_slot_is_not_a_variable(self):
        inst = micro([("A", "M", 2, 2, 0, 0)], {"A": [(("R1",), [(0, 8)])]}, horizon=8, maintenance={"R1": [(5, 6)]})
        m = build_model(inst)
        assert m.is_fixed_zero("X", "A/v0", 5)
        assert not m.is_fixed_zero("X", "A/v0", 4)

    def test_setup_and_teardown_must_fit_the_horizon(self):
        inst = micro([("A", "M", 2, 2, 2, 1)], {"A": [(("R1",), [(0, 10)])]}, horizon=10)
        m = build_model(inst)
        tracked = sorted(k[2] for k in m.variables.keys if k[0] == "X")
        assert tracked == list(range(2, 9))

    def test_weights_must_cover_instance(self, single):
        with pytest.raises(ModelError):
            build_model(single, weights=Weights(c1={}, c2={}))

    def test_ablated_tags_leave_no_rows(self):
        inst = micro([("A", "M", 2, 2, 0, 0), ("B", "M", 2, 2, 0, 0)],
                     {"A": [(("R1",), [(0, 8)])], "B": [(("R2",), [(0, 8)])]}, resources=("R1", "R2"), horizon=8)
        full = count_model(build_model(inst)).n_constraints_by_tag
        cut = count_model(build_model(inst, config=ModelConfig(ablate=parse_ablation("2j")))).n_constraints_by_tag
        assert full.get("2j", 0) > 0 and "2j" not in cut

    def test_single_interval_rows(self, single):
        m = build_model(single, config=ModelConfig(single_interval=True))
        assert count_model(m).n_constraints_by_tag["single"] == 1

    def test_unschedulable_activity_is_flagged_not_fatal(self):
        inst = micro([("A", "M", 6, 6, 0, 0)], {"A": [(("R1",), [(0, 4)])]}, horizon=8)
        m = build_model(inst)
        assert m.warnings and "A" in m.warnings[0]

    def test_w44_model_size(self):
        expanded, reg = expand_splits(w44_2016_instance(0))
        c = count_model(build_model(expanded, reg))
        assert 10_000 <= c.n_binaries < 200_000
        assert c.n_binaries_dense > 10 * c.n_binaries


class TestSemantics:
    def test_setup_flags_sit_right_before_the_start(self):
        inst = micro([("A", "M", 4, 8, 4, 1)], {"A": [(("R1",), [(0, 40)])]}, horizon=40)
        m = build_model(inst)
        sched = Schedule((make_track(inst, "A/v0", 10, 14),), frozenset({"A"}))
        values = schedule_to_values(m, sched)
        on = sorted(int(n.split("_t")[1]) for n, v in values.items() if v and n.startswith("Yu_"))
        assert on == [6, 7, 8, 9]
        assert first_violation(m, encode_schedule(m, sched)) is None

    def test_decode_track_with_setup_and_teardown(self):
        inst = micro([("A", "M", 16, 16, 4, 1)], {"A": [(("R1",), [(0, 48)])]}, horizon=48)
        m = build_model(inst)
        names = ["x_a0"] + [f"X_v0_t{t}" for t in range(10, 26)] + ["Xu_v0_t10", "Xd_v0_t26"]
        names += [f"Yu_v0_t{t}" for t in range(6, 10)] + ["Yd_v0_t26"]
        sched = extract_schedule(m, _vec(m, names))
        (tr,) = sched.tracks
        assert (tr.setup, tr.track, tr.teardown) == ((6, 10), (10, 26), (26, 27))
        assert sched.completed == {"A"}

    def test_all_zero_decodes_to_empty(self, single):
        m = build_model(single)
        sched = extract_schedule(m, np.zeros(m.n_vars, dtype=np.int64))
        assert len(sched) == 0 and not sched.completed

    def test_overlap_on_one_antenna_is_caught(self):
        inst = micro([("A", "M", 2, 2, 0, 0), ("B", "N", 2, 2, 0, 0)],
                     {"A": [(("R1",), [(0, 8)])], "B": [(("R1",), [(0, 8)])]}, horizon=8)
        m = build_model(inst)
        sched = Schedule((make_track(inst, "A/v0", 2, 4), make_track(inst, "B/v0", 3, 5)), frozenset({"A", "B"}))
        with pytest.raises(DecodeError) as err:
            extract_schedule(m, encode_schedule(m, sched))
        assert err.value.tag == "2h"

    def test_start_and_end_in_one_slot_is_rejected(self):
        inst = micro([("A", "M", 2, 4, 0, 0)], {"A": [(("R1",), [(0, 8)])]}, horizon=8)
        m = build_model(inst)
        sched = Schedule((make_track(inst, "A/v0", 2, 6),), frozenset({"A"}))
        vec = encode_schedule(m, sched)
        vec[m.var("Xu", "A/v0", 4)] = 1
        vec[m.var("Xd", "A/v0", 4)] = 1
        assert first_violation(m, vec) is not None

    def test_pruned_variable_in_assignment(self):
        inst = micro([("A", "M", 2, 2, 0, 0)], {"A": [(("R1",), [(0, 4)])]}, horizon=8)
        m = build_model(inst)
        with pytest.raises(DecodeError) as err:
            assignment_vector(m, {"X_v0_t6": 1})
        assert err.value.tag == "2b"

    def test_non_binary_entries(self, single):
        m = build_model(single)
        vec = np.zeros(m.n_vars, dtype=np.int64)
        vec[0] = 2
        assert first_violation(m, vec) == "binary"

    def test_oracle_solutions_round_trip(self, corpus):
        for case in corpus:
            m = build_model(case.instance, case.registry)
            a = solve_exact_oracle(case.instance, case.registry)
            vec = assignment_vector(m, a.values)
            assert objective_value(m, vec) == a.objective
            sched = extract_schedule(m, vec)
            assert np.array_equal(encode_schedule(m, sched), vec), case.name
