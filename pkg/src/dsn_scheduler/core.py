"""Domain types, the slot grid, and the four 0/1 mapping matrices.

Everything here is slot-indexed: a duration is an integer number of grid
slots and an interval is a half-open ``(start, end)`` pair of slot indices.
Wall-clock values only show up when a grid converts to or from timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .exceptions import ConfigurationError, IntegrityError, QuantizationError

WEEK_MINUTES = 7 * 24 * 60
ALLOWED_SLOT_MINUTES = (1, 5, 15, 30, 60)


@dataclass(frozen=True)
class TimeGrid:
    slot_minutes: int = 15
    horizon_slots: int = 672
    origin: datetime = datetime(2016, 10, 31, tzinfo=timezone.utc)

    def __post_init__(self):
        if self.slot_minutes not in ALLOWED_SLOT_MINUTES:
            raise ConfigurationError(
                f"slot length {self.slot_minutes} min must be one of {ALLOWED_SLOT_MINUTES}"
            )
        if self.horizon_slots < 0:
            raise ConfigurationError("horizon_slots must be non-negative")

    @property
    def slots_per_hour(self) -> int:
        return 60 // self.slot_minutes

    @property
    def horizon_hours(self) -> Fraction:
        return Fraction(self.horizon_slots * self.slot_minutes, 60)

    def slot_to_datetime(self, slot: int) -> datetime:
        return self.origin + timedelta(minutes=slot * self.slot_minutes)

    def slots_to_hours(self, slots: int) -> float:
        return slots * self.slot_minutes / 60


def build_time_grid(week_start: datetime, slot_minutes: int = 15) -> TimeGrid:
    """Return a one-week grid starting at ``week_start`` (UTC assumed if naive)."""
    if slot_minutes not in ALLOWED_SLOT_MINUTES or 60 % slot_minutes:
        raise ConfigurationError(f"slot length {slot_minutes} min does not divide 60")
    if week_start.tzinfo is None:
        week_start = week_start.replace(tzinfo=timezone.utc)
    return TimeGrid(
        slot_minutes=slot_minutes,
        horizon_slots=WEEK_MINUTES // slot_minutes,
        origin=week_start.astimezone(timezone.utc),
    )


def to_slots(duration_minutes, grid: TimeGrid) -> int:
    """Convert minutes to whole slots; never rounds."""
    minutes = Fraction(str(duration_minutes))
    if minutes < 0:
        raise QuantizationError(f"negative duration {duration_minutes} min")
    slots = minutes / grid.slot_minutes
    if slots.denominator != 1:
        raise QuantizationError(
            f"{duration_minutes} min is not a multiple of the {grid.slot_minutes}-min slot"
        )
    return int(slots)


def hours_to_slots(hours, grid: TimeGrid) -> int:
    return to_slots(Fraction(str(hours)) * 60, grid)


def slots_to_hours(slots: int, grid: TimeGrid) -> Fraction:
    return Fraction(slots * grid.slot_minutes, 60)


@dataclass(frozen=True)
class Resource:
    id: str
    complex: str = ""
    diameter_m: int = 34
    maintenance: tuple[tuple[int, int], ...] = ()

    @cached_property
    def maintenance_slots(self) -> frozenset[int]:
        return frozenset(t for s, e in self.maintenance for t in range(s, e))


@dataclass(frozen=True)
class Mission:
    id: str
    activity_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class Activity:
    """A tracking request; all durations are in slots.

    ``min_up`` defaults to ``d_min`` and ``min_down`` to zero when left as None.
    ``parent_id`` is set only on split clones.
    """

    id: str
    mission_id: str
    d_min: int
    d_max: int
    setup: int = 0
    teardown: int = 0
    view_period_ids: tuple[str, ...] = ()
    min_up: int | None = None
    min_down: int | None = None
    parent_id: str | None = None
    split_eligible: bool = True

    @property
    def gamma_up(self) -> int:
        return self.d_min if self.min_up is None else self.min_up

    @property
    def gamma_down(self) -> int:
        return 0 if self.min_down is None else self.min_down

    @property
    def root_id(self) -> str:
        return self.parent_id or self.id

    @property
    def is_clone(self) -> bool:
        return self.parent_id is not None


@dataclass(frozen=True)
class ViewPeriod:
    id: str
    resource_ids: tuple[str, ...]
    windows: tuple[tuple[int, int], ...]

    @property
    def is_arrayed(self) -> bool:
        return len(self.resource_ids) > 1


@dataclass(frozen=True)
class ProblemInstance:
    grid: TimeGrid
    missions: tuple[Mission, ...]
    activities: tuple[Activity, ...]
    resources: tuple[Resource, ...]
    view_periods: tuple[ViewPeriod, ...]
    label: str = ""

    @cached_property
    def activity_by_id(self) -> dict[str, Activity]:
        return {a.id: a for a in self.activities}

    @cached_property
    def mission_by_id(self) -> dict[str, Mission]:
        return {m.id: m for m in self.missions}

    @cached_property
    def resource_by_id(self) -> dict[str, Resource]:
        return {r.id: r for r in self.resources}

    @cached_property
    def view_period_by_id(self) -> dict[str, ViewPeriod]:
        return {v.id: v for v in self.view_periods}

    @cached_property
    def activity_of_view_period(self) -> dict[str, str]:
        return {v: a.id for a in self.activities for v in a.view_period_ids}

    @property
    def requested_slots(self) -> int:
        """Requested tracking time over original requests (clones excluded)."""
        return sum(a.d_max for a in self.activities if not a.is_clone)

    def mission_activities(self, mission_id: str) -> list[Activity]:
        return [a for a in self.activities if a.mission_id == mission_id]


def check_integrity(instance: ProblemInstance) -> None:
    """Raise IntegrityError listing every broken reference or invariant."""
    problems = []
    grid = instance.grid

    for kind, items in (
        ("mission", instance.missions),
        ("activity", instance.activities),
        ("resource", instance.resources),
        ("view period", instance.view_periods),
    ):
        seen = set()
        for item in items:
            if item.id in seen:
                problems.append(f"duplicate {kind} id {item.id!r}")
            seen.add(item.id)

    resources = instance.resource_by_id
    for r in resources.values():
        for s, e in r.maintenance:
            if not 0 <= s < e <= grid.horizon_slots:
                problems.append(f"resource {r.id!r}: maintenance [{s},{e}) outside horizon")

    for v in instance.view_periods:
        if not v.resource_ids:
            problems.append(f"view period {v.id!r} has no resources")
        for rid in v.resource_ids:
            if rid not in resources:
                problems.append(f"view period {v.id!r} references missing resource {rid!r}")
        last_end = 0
        for s, e in v.windows:
            if not 0 <= s < e <= grid.horizon_slots:
                problems.append(f"view period {v.id!r}: window [{s},{e}) outside horizon")
            elif s < last_end:
                problems.append(f"view period {v.id!r}: windows overlap or are unsorted")
            last_end = max(last_end, e)

    vps = instance.view_period_by_id
    missions = instance.mission_by_id
    owner: dict[str, str] = {}
    for a in instance.activities:
        if a.mission_id not in missions:
            problems.append(f"activity {a.id!r} references missing mission {a.mission_id!r}")
        if not a.view_period_ids:
            problems.append(f"activity {a.id!r} has no view periods")
        for vid in a.view_period_ids:
            if vid not in vps:
                problems.append(f"activity {a.id!r} references missing view period {vid!r}")
            elif vid in owner:
                problems.append(f"view period {vid!r} shared by {owner[vid]!r} and {a.id!r}")
            owner[vid] = a.id
        if not 0 < a.d_min <= a.d_max:
            problems.append(f"activity {a.id!r}: need 0 < d_min <= d_max")
        if a.setup < 0 or a.teardown < 0:
            problems.append(f"activity {a.id!r}: negative setup/teardown")
        if a.gamma_up < 0 or a.gamma_down < 0:
            problems.append(f"activity {a.id!r}: negative min up/down time")
        if a.parent_id is not None and a.parent_id not in instance.activity_by_id:
            problems.append(f"clone {a.id!r} references missing parent {a.parent_id!r}")

    for m in instance.missions:
        for aid in m.activity_ids:
            act = instance.activity_by_id.get(aid)
            if act is None:
                problems.append(f"mission {m.id!r} lists missing activity {aid!r}")
            elif act.mission_id != m.id:
                problems.append(f"activity {aid!r} listed under {m.id!r} but belongs to {act.mission_id!r}")

    if instance.activities and instance.requested_slots <= 0:
        problems.append("total requested time must be positive")

    if problems:
        raise IntegrityError("; ".join(problems), offenders=problems)


def availability_mask(instance: ProblemInstance, vp: ViewPeriod) -> np.ndarray:
    """Boolean row of V: inside a window and clear of every member's maintenance."""
    mask = np.zeros(instance.grid.horizon_slots, dtype=bool)
    for s, e in vp.windows:
        mask[s:e] = True
    for rid in vp.resource_ids:
        for s, e in instance.resource_by_id[rid].maintenance:
            mask[s:e] = False
    return mask


@dataclass(frozen=True)
class MatrixBundle:
    """Sparse R (resources x VPs), A (activities x VPs), M (missions x activities), V (VPs x slots)."""

    R: sparse.csr_matrix
    A: sparse.csr_matrix
    M: sparse.csr_matrix
    V: sparse.csr_matrix
    resource_ids: tuple[str, ...]
    view_period_ids: tuple[str, ...]
    activity_ids: tuple[str, ...]
    mission_ids: tuple[str, ...]

    def equals(self, other: "MatrixBundle") -> bool:
        if (self.resource_ids, self.view_period_ids, self.activity_ids, self.mission_ids) != (
            other.resource_ids, other.view_period_ids, other.activity_ids, other.mission_ids
        ):
            return False
        return all(
            getattr(self, k).shape == getattr(other, k).shape
            and (getattr(self, k) != getattr(other, k)).nnz == 0
            for k in "RAMV"
        )


def _incidence(rows: Mapping[str, int], cols: Mapping[str, int], pairs: Iterable[tuple[str, str]]):
    r, c = [], []
    for a, b in pairs:
        r.append(rows[a])
        c.append(cols[b])
    data = np.ones(len(r), dtype=np.int8)
    return sparse.csr_matrix((data, (r, c)), shape=(len(rows), len(cols)), dtype=np.int8)


def assemble_matrices(instance: ProblemInstance) -> MatrixBundle:
    check_integrity(instance)
    res_idx = {r.id: i for i, r in enumerate(instance.resources)}
    vp_idx = {v.id: j for j, v in enumerate(instance.view_periods)}
    act_idx = {a.id: i for i, a in enumerate(instance.activities)}
    mis_idx = {m.id: i for i, m in enumerate(instance.missions)}

    R = _incidence(res_idx, vp_idx, ((r, v.id) for v in instance.view_periods for r in v.resource_ids))
    A = _incidence(act_idx, vp_idx, ((a.id, v) for a in instance.activities for v in a.view_period_ids))
    M = _incidence(mis_idx, act_idx, ((a.mission_id, a.id) for a in instance.activities))

    horizon = instance.grid.horizon_slots
    rows = [availability_mask(instance, v) for v in instance.view_periods]
    dense = np.vstack(rows) if rows else np.zeros((0, horizon), dtype=bool)
    V = sparse.csr_matrix(dense.astype(np.int8))
    return MatrixBundle(
        R=R, A=A, M=M, V=V,
        resource_ids=tuple(res_idx), view_period_ids=tuple(vp_idx),
        activity_ids=tuple(act_idx), mission_ids=tuple(mis_idx),
    )


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * var) <sense> rhs`` over symbolic variable keys.

    Keys are tuples such as ``("x", activity_id)``; the model builder maps
    them to dense indices.
    """

    terms: tuple[tuple[tuple, int], ...]
    sense: str
    rhs: int
    tag: str = ""

    def holds(self, values: Mapping[tuple, int]) -> bool:
        lhs = sum(coef * values.get(key, 0) for key, coef in self.terms)
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


__all__ = [
    "Activity", "LinearConstraint", "MatrixBundle", "Mission", "ProblemInstance",
    "Resource", "TimeGrid", "ViewPeriod", "assemble_matrices", "availability_mask",
    "build_time_grid", "check_integrity", "hours_to_slots", "slots_to_hours", "to_slots",
]
