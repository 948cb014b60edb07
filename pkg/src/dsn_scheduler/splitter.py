"""XOR splitting of long requests into two half-length clones."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

from .core import Activity, LinearConstraint, Mission, ProblemInstance, ViewPeriod, check_integrity
from .exceptions import QuantizationError

SPLIT_THRESHOLD_HOURS = 8
MIN_SEGMENT_HOURS = 4


class SplitTriple(NamedTuple):
    parent: str
    first: str
    second: str


@dataclass(frozen=True)
class SplitRegistry:
    triples: tuple[SplitTriple, ...] = ()

    def group(self, parent_id: str) -> tuple[str, str, str] | None:
        """The set {a, a', a''} for a split parent, None when not split."""
        for t in self.triples:
            if t.parent == parent_id:
                return tuple(t)
        return None

    @property
    def parents(self) -> frozenset[str]:
        return frozenset(t.parent for t in self.triples)

    @property
    def clone_parent(self) -> dict[str, str]:
        return {c: t.parent for t in self.triples for c in (t.first, t.second)}


# An expanded instance is an ordinary ProblemInstance that also holds clones.
ExpandedInstance = ProblemInstance


def _half(slots: int, what: str, activity_id: str) -> int:
    if slots % 2:
        raise QuantizationError(f"{activity_id}: {what} of {slots} slots cannot be halved on the grid")
    return slots // 2


def clone_ids(activity_id: str) -> tuple[str, str]:
    return f"{activity_id}'", f"{activity_id}''"


def expand_splits(instance: ProblemInstance) -> tuple[ExpandedInstance, SplitRegistry]:
    """Duplicate every request of at least eight hours into two clones.

    Clones get d_max/2 and max(4 h, d_min/2), their own copies of the parent's
    view periods, and are never split again.
    """
    grid = instance.grid
    threshold = SPLIT_THRESHOLD_HOURS * grid.slots_per_hour
    floor = MIN_SEGMENT_HOURS * grid.slots_per_hour
    vps = instance.view_period_by_id

    new_acts: list[Activity] = []
    new_vps: list[ViewPeriod] = list(instance.view_periods)
    triples: list[SplitTriple] = []
    members: dict[str, list[str]] = {m.id: list(m.activity_ids) for m in instance.missions}

    for a in instance.activities:
        new_acts.append(a)
        if a.is_clone or not a.split_eligible or a.d_max < threshold:
            continue
        d_max = _half(a.d_max, "d_max", a.id)
        d_min = floor if 2 * floor >= a.d_min else _half(a.d_min, "d_min", a.id)
        ids = clone_ids(a.id)
        for suffix, cid in zip(("'", "''"), ids):
            copies = [replace(vps[v], id=f"{v}{suffix}") for v in a.view_period_ids]
            new_vps.extend(copies)
            new_acts.append(
                replace(
                    a,
                    id=cid,
                    d_min=d_min,
                    d_max=d_max,
                    min_up=None if a.min_up is None else min(a.min_up, d_min),
                    view_period_ids=tuple(v.id for v in copies),
                    parent_id=a.id,
                    split_eligible=False,
                )
            )
            members[a.mission_id].append(cid)
        triples.append(SplitTriple(a.id, *ids))

    expanded = ProblemInstance(
        grid=grid,
        missions=tuple(Mission(m.id, tuple(members[m.id])) for m in instance.missions),
        activities=tuple(new_acts),
        resources=instance.resources,
        view_periods=tuple(new_vps),
        label=instance.label,
    )
    check_integrity(expanded)
    return expanded, SplitRegistry(tuple(triples))


def xor_constraints(registry: SplitRegistry) -> list[LinearConstraint]:
    """x' <= x'', x'' <= x', x <= 1 - x' for every split triple."""
    out = []
    for parent, first, second in registry.triples:
        x, x1, x2 = ("x", parent), ("x", first), ("x", second)
        out.append(LinearConstraint(((x1, 1), (x2, -1)), "<=", 0, "2k"))
        out.append(LinearConstraint(((x2, 1), (x1, -1)), "<=", 0, "2l"))
        out.append(LinearConstraint(((x, 1), (x1, 1)), "<=", 1, "2m"))
    return out
