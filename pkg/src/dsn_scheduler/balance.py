"""Iterative re-weighting to even out mission satisfaction.

Each round solves the program with the current weights, doubles the
weights of every mission that fell short of the running threshold, raises
the threshold whenever every mission clears it, and doubles the solver time
budget when a round reproduces the previous schedule. The saved schedule
closest to the ideal corner of (U_RMS, U_MAX, 1/U_AVG[, 1/U_PRIO]) wins.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, TextIO

from .core import ProblemInstance
from .evaluate import MetricsReport, compute_metrics, distance, validate_schedule
from .exceptions import BalancerError, ConfigurationError
from .milp import MilpModel, ModelConfig, Schedule, Weights, build_model, extract_schedule
from .solve.base import Assignment
from .splitter import SplitRegistry

log = logging.getLogger(__name__)


def _frac(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(str(value))


@dataclass(frozen=True)
class BalancerConfig:
    eta0: float = 0.15
    incr_threshold: float = 0.05
    k_max: int = 10
    k_time: float = 1800.0
    priority_multiplier: float = 5.0
    prioritized_missions: frozenset[str] = frozenset()
    max_solves: int = 50

    def __post_init__(self):
        object.__setattr__(self, "prioritized_missions", frozenset(self.prioritized_missions))
        if not 0 < self.eta0 < 1:
            raise ConfigurationError(f"eta0 must lie in (0, 1), got {self.eta0}")
        if self.incr_threshold <= 0:
            raise ConfigurationError("incr_threshold must be positive")
        if self.k_max < 1 or self.max_solves < 1:
            raise ConfigurationError("k_max and max_solves must be at least 1")
        if self.k_time <= 0:
            raise ConfigurationError("k_time must be positive")
        if self.priority_multiplier < 1:
            raise ConfigurationError("priority_multiplier must be at least 1")


@dataclass(frozen=True)
class SavedSolution:
    schedule: Schedule
    metrics: MetricsReport
    weights: Weights
    threshold: Fraction
    assignment: Assignment


@dataclass(frozen=True)
class BalancerResult:
    solutions: tuple[SavedSolution, ...]
    chosen_index: int
    log: tuple[dict, ...]
    cap_hit: bool = False

    @property
    def chosen(self) -> SavedSolution:
        return self.solutions[self.chosen_index]


def initial_weights(instance: ProblemInstance, config: BalancerConfig) -> Weights:
    """All ones, with prioritized missions' activities (clones too) at the multiplier."""
    unknown = config.prioritized_missions - set(instance.mission_by_id)
    if unknown:
        raise ConfigurationError(f"cannot prioritize unknown missions {sorted(unknown)}")
    c1 = {
        a.id: float(config.priority_multiplier) if a.mission_id in config.prioritized_missions else 1.0
        for a in instance.activities
    }
    return Weights(c1=c1, c2={v.id: 1.0 for v in instance.view_periods})


def update_weights(
    weights: Weights,
    satisfactions: Mapping[str, Fraction],
    threshold,
    instance: ProblemInstance,
) -> Weights:
    """Double c1 and c2 of every mission strictly below the threshold."""
    threshold = _frac(threshold)
    low = {m for m, s in satisfactions.items() if _frac(s) < threshold}
    acts = [a for a in instance.activities if a.mission_id in low]
    boost_a = {a.id for a in acts}
    boost_v = {v for a in acts for v in a.view_period_ids}
    return Weights(
        c1={k: 2 * v if k in boost_a else v for k, v in weights.c1.items()},
        c2={k: 2 * v if k in boost_v else v for k, v in weights.c2.items()},
    )


def select_best(reports: Sequence[MetricsReport], prioritized: bool | None = None) -> int:
    """Index of the smallest distance; the earliest wins ties.

    ``prioritized`` defaults to whether the reports carry a priority set.
    """
    if not reports:
        raise BalancerError("no solutions to choose from")
    best, best_d = 0, math.inf
    for i, r in enumerate(reports):
        use_prio = bool(getattr(r, "prioritized", ())) if prioritized is None else prioritized
        u_prio = r.U_PRIO if use_prio else None
        if use_prio and u_prio is None:
            u_prio = 0.0
        d = distance(r.U_RMS, r.U_MAX, r.U_AVG, u_prio)
        if d < best_d:
            best, best_d = i, d
    return best


SolverFn = Callable[[MilpModel, float], Assignment]


def _fmt(x: Fraction) -> float:
    return float(x)


def run_balancer(
    expanded: ProblemInstance,
    registry: SplitRegistry,
    config: BalancerConfig,
    solver: SolverFn,
    model_config: ModelConfig | None = None,
    log_stream: TextIO | None = None,
    model: MilpModel | None = None,
) -> BalancerResult:
    """Run the re-weighting loop to completion (or to the hard solve cap).

    ``solver`` is any callable taking (model, seconds) and returning an
    :class:`Assignment`. The model structure is built once; only its
    objective changes between rounds.
    """
    model = model or build_model(expanded, registry, None, model_config)
    prioritized = config.prioritized_missions
    weights = initial_weights(expanded, config)
    threshold = _frac(config.eta0)
    incr = _frac(config.incr_threshold)
    k_time = float(config.k_time)
    k = 0
    saved: list[SavedSolution] = []
    records: list[dict] = []
    previous: Schedule | None = None
    cap_hit = False

    def emit(record: dict) -> None:
        records.append(record)
        if log_stream is not None:
            log_stream.write(json.dumps(record, sort_keys=True) + "\n")
            log_stream.flush()

    while k < config.k_max:
        if len(saved) >= config.max_solves:
            cap_hit = True
            log.warning("balancer stopped by the hard cap of %d solves before its own exit condition", config.max_solves)
            emit({"event": "cap_hit", "solves": len(saved)})
            break
        assignment = solver(model.with_weights(weights), k_time)
        if not assignment.status.has_solution:
            emit({"event": "solver_failed", "solve": len(saved), "status": assignment.status.value,
                  "message": assignment.message})
            raise BalancerError(f"solve {len(saved)} failed with status {assignment.status.value}: {assignment.message}",
                                records)
        schedule = extract_schedule(model, assignment.values)
        validation = validate_schedule(expanded, registry, schedule)
        metrics = compute_metrics(expanded, registry, schedule, prioritized, validation)
        saved.append(SavedSolution(schedule, metrics, weights, threshold, assignment))

        sats = metrics.satisfactions()
        if sats and min(sats.values()) >= 1:
            # d is at its floor of 1; further rounds would only repeat this schedule
            emit({"event": "solve", "solve": len(saved) - 1, "k": k, "threshold": _fmt(threshold), "k_time": k_time,
                  "status": assignment.status.value, "objective": assignment.objective,
                  "satisfaction": {m: _fmt(s) for m, s in sorted(sats.items())}, "d": metrics.d,
                  "valid_tracks_pct": validation.valid_fraction, "all_satisfied": True})
            break
        record = {
            "event": "solve",
            "solve": len(saved) - 1,
            "k": k,
            "threshold": _fmt(threshold),
            "k_time": k_time,
            "status": assignment.status.value,
            "objective": assignment.objective,
            "satisfaction": {m: _fmt(s) for m, s in sorted(sats.items())},
            "U_RMS": metrics.U_RMS,
            "U_MAX": metrics.U_MAX,
            "U_AVG": metrics.U_AVG,
            "U_PRIO": metrics.U_PRIO,
            "d": None if math.isinf(metrics.d) else metrics.d,
            "valid_tracks_pct": validation.valid_fraction,
        }

        record["doubled"] = sorted(m for m, s in sats.items() if s < threshold)
        weights = update_weights(weights, sats, threshold, expanded)

        escalations = 0
        while min(sats.values()) >= threshold:
            threshold += incr
            k = 0
            escalations += 1
        record["escalations"] = escalations

        record["k_time_doubled"] = previous is not None and schedule == previous
        if record["k_time_doubled"]:
            k_time *= 2
            k = 0
        previous = schedule
        k += 1
        record["k_next"] = k
        record["threshold_next"] = _fmt(threshold)
        emit(record)

    if not saved:
        raise BalancerError("the balancer saved no solutions", records)
    chosen = select_best([s.metrics for s in saved], bool(prioritized))
    emit({"event": "chosen", "index": chosen, "d": None if math.isinf(saved[chosen].metrics.d) else saved[chosen].metrics.d,
          "cap_hit": cap_hit})
    return BalancerResult(tuple(saved), chosen, tuple(records), cap_hit)


def weights_trace(result: BalancerResult, ids: Iterable[str]) -> dict[str, list[float]]:
    """c1 of the given activities at each saved solve, for monotonicity checks."""
    ids = list(ids)
    return {i: [s.weights.c1[i] for s in result.solutions] for i in ids}


__all__ = [
    "BalancerConfig",
    "BalancerResult",
    "SavedSolution",
    "initial_weights",
    "run_balancer",
    "select_best",
    "update_weights",
    "weights_trace",
]
