import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dsn_scheduler.estimator import BalancedScheduler

from conftest import micro

INST = micro(
    [("A", "MA", 2, 2, 0, 0), ("B", "MB", 3, 3, 0, 0)],
    {"A": [(("R1",), [(0, 4)])], "B": [(("R1",), [(0, 4)])]},
    horizon=4,
)


def test_params_round_trip():
    est = BalancedScheduler(solver="oracle", k_max=3, prioritize=("MA",))
    params = est.get_params()
    assert params["k_max"] == 3 and params["prioritize"] == ("MA",)
    assert clone(est).get_params() == params


def test_fit_predict_score():
    est = BalancedScheduler(solver="oracle", k_max=2).fit(INST)
    sched = est.predict(INST)
    assert est.validate().ok
    assert est.score() == -est.metrics_.d
    assert len(sched) >= 1


def test_priority_changes_the_winner():
    plain = BalancedScheduler(solver="oracle", k_max=1).fit(INST).predict()
    boosted = BalancedScheduler(solver="oracle", k_max=1, prioritize=("MA",)).fit(INST).predict()
    assert {t.mission_id for t in plain.tracks} == {"MB"}
    assert {t.mission_id for t in boosted.tracks} == {"MA"}


def test_unfitted():
    with pytest.raises(NotFittedError):
        BalancedScheduler().predict()


def test_predict_on_another_instance():
    est = BalancedScheduler(solver="oracle", k_max=1).fit(INST)
    other = micro([("A", "MA", 1, 1, 0, 0)], {"A": [(("R1",), [(0, 2)])]}, horizon=2)
    with pytest.raises(ValueError):
        est.predict(other)


def test_rejects_non_instances():
    with pytest.raises(TypeError):
        BalancedScheduler(solver="oracle").fit([[1, 2, 3]])
