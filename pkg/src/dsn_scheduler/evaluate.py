"""Schedule validation and satisfaction metrics.

Everything here works on interval arithmetic over the decoded tracks and
the instance; nothing reads the solver's variables, so a broken model or a
lying backend cannot make a schedule look valid.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .core import ProblemInstance
from .exceptions import IntegrityError
from .milp import Schedule, Track
from .splitter import SplitRegistry

RULES = (
    "in_view_period",
    "duration_bounds",
    "setup_teardown_shape",
    "resource_overlap",
    "mission_overlap",
    "split_rules",
    "min_up_down",
)


@dataclass(frozen=True)
class TrackVerdict:
    track: Track
    violations: tuple[str, ...]

    @property
    def valid(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class ValidationReport:
    verdicts: tuple[TrackVerdict, ...]
    global_violations: tuple[str, ...] = ()
    strict: bool = False

    @property
    def n_tracks(self) -> int:
        return len(self.verdicts)

    @property
    def n_valid(self) -> int:
        return sum(v.valid for v in self.verdicts)

    @property
    def empty(self) -> bool:
        return not self.verdicts

    @property
    def valid_fraction(self) -> float:
        """Percentage of tracks with no violation; an empty schedule counts as 100."""
        if self.empty:
            return 100.0
        return 100.0 * self.n_valid / self.n_tracks

    @property
    def ok(self) -> bool:
        return self.n_valid == self.n_tracks and not self.global_violations

    def tag_counts(self) -> dict[str, int]:
        counts = {r: 0 for r in RULES}
        for v in self.verdicts:
            for tag in v.violations:
                counts[tag] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "valid_tracks_pct": round(self.valid_fraction, 1),
            "n_tracks": self.n_tracks,
            "n_valid": self.n_valid,
            "empty_schedule": self.empty,
            "strict_containment": self.strict,
            "violations_by_rule": self.tag_counts(),
            "invalid_tracks": [
                {"track": v.track.to_dict(), "violations": list(v.violations)} for v in self.verdicts if not v.valid
            ],
            "global_violations": list(self.global_violations),
        }

    def summary(self) -> str:
        line = f"{self.valid_fraction:.1f}% valid ({self.n_valid}/{self.n_tracks} tracks)"
        if self.empty:
            line += " [empty schedule]"
        bad = {k: n for k, n in self.tag_counts().items() if n}
        if bad:
            line += " violations: " + ", ".join(f"{k}={n}" for k, n in bad.items())
        if self.global_violations:
            line += f"; {len(self.global_violations)} schedule-level problems"
        return line


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def _resolve(instance: ProblemInstance, tr: Track) -> None:
    acts, vps = instance.activity_by_id, instance.view_period_by_id
    a = acts.get(tr.activity_id)
    if a is None:
        raise IntegrityError(f"unknown activity {tr.activity_id}", offenders=[tr.activity_id])
    if tr.view_period_id not in a.view_period_ids or tr.view_period_id not in vps:
        raise IntegrityError(f"view period {tr.view_period_id} does not belong to {a.id}", offenders=[tr.view_period_id])
    if tuple(tr.resource_ids) != vps[tr.view_period_id].resource_ids:
        raise IntegrityError(f"track on {tr.view_period_id} names resources {tr.resource_ids}",
                             offenders=[tr.view_period_id])
    if tr.mission_id != a.mission_id or tr.parent_id != a.root_id:
        raise IntegrityError(f"track of {a.id} carries wrong mission or parent", offenders=[a.id])


def validate_schedule(
    instance: ProblemInstance,
    registry: SplitRegistry | None,
    schedule: Schedule,
    strict: bool = False,
) -> ValidationReport:
    """Check every track against the scheduling rules.

    By default setup and teardown may hang outside the view period, as the
    optimization model allows; ``strict`` demands the whole span fit inside
    one window.
    """
    registry = registry or SplitRegistry()
    H = instance.grid.horizon_slots
    tracks = list(schedule.tracks)
    for tr in tracks:
        _resolve(instance, tr)
    unknown = [a for a in schedule.completed if a not in instance.activity_by_id]
    if unknown:
        raise IntegrityError(f"completed set names unknown activities {sorted(unknown)}", offenders=unknown)

    tags: list[set[str]] = [set() for _ in tracks]
    problems: list[str] = []
    acts = instance.activity_by_id

    for i, tr in enumerate(tracks):
        a = acts[tr.activity_id]
        vp = instance.view_period_by_id[tr.view_period_id]
        s, e = tr.track
        if tr.setup != (s - a.setup, s) or tr.teardown != (e, e + a.teardown) or e <= s:
            tags[i].add("setup_teardown_shape")
        inner = tr.span if strict else tr.track
        if not any(ws <= inner[0] and inner[1] <= we for ws, we in vp.windows):
            tags[i].add("in_view_period")
        if tr.span[0] < 0 or tr.span[1] > H:
            tags[i].add("in_view_period")
        for rid in vp.resource_ids:
            if any(_overlaps(tr.track, m) for m in instance.resource_by_id[rid].maintenance):
                tags[i].add("in_view_period")
        if e - s < a.gamma_up and e != H:
            tags[i].add("min_up_down")

    # pairwise occupancy
    for i in range(len(tracks)):
        for j in range(i + 1, len(tracks)):
            ti, tj = tracks[i], tracks[j]
            if not _overlaps(ti.span, tj.span):
                continue
            if set(ti.resource_ids) & set(tj.resource_ids):
                tags[i].add("resource_overlap")
                tags[j].add("resource_overlap")
            if ti.mission_id == tj.mission_id:
                tags[i].add("mission_overlap")
                tags[j].add("mission_overlap")

    # minimum down time between consecutive tracks of one view period
    by_vp: dict[str, list[int]] = defaultdict(list)
    for i, tr in enumerate(tracks):
        by_vp[tr.view_period_id].append(i)
    for idxs in by_vp.values():
        idxs.sort(key=lambda i: tracks[i].track)
        for p, q in zip(idxs, idxs[1:]):
            gap = tracks[q].track[0] - tracks[p].track[1]
            if gap < max(acts[tracks[p].activity_id].gamma_down, 1):
                tags[p].add("min_up_down")
                tags[q].add("min_up_down")

    # durations per activity
    by_act: dict[str, list[int]] = defaultdict(list)
    for i, tr in enumerate(tracks):
        by_act[tr.activity_id].append(i)
    for aid, idxs in by_act.items():
        a = acts[aid]
        total = sum(tracks[i].tracked_slots for i in idxs)
        if aid not in schedule.completed or not a.d_min <= total <= a.d_max:
            for i in idxs:
                tags[i].add("duration_bounds")
    for aid in sorted(schedule.completed):
        if aid not in by_act and acts[aid].d_min > 0:
            problems.append(f"{aid} is marked completed but has no tracks")

    # XOR splitting: parent alone, or both halves, never a mix
    for parent, first, second in registry.triples:
        done = [x in schedule.completed for x in (parent, first, second)]
        bad = (done[1] != done[2]) or (done[0] and done[1])
        members = [i for x in (parent, first, second) for i in by_act.get(x, [])]
        if bad:
            problems.append(f"split group {parent} has completion pattern {tuple(int(d) for d in done)}")
            for i in members:
                tags[i].add("split_rules")
        elif done[1]:
            total = sum(tracks[i].tracked_slots for i in members)
            pa = acts[parent]
            if not 2 * acts[first].d_min <= total <= pa.d_max:
                for i in members:
                    tags[i].add("duration_bounds")

    verdicts = tuple(TrackVerdict(tr, tuple(r for r in RULES if r in t)) for tr, t in zip(tracks, tags))
    return ValidationReport(verdicts, tuple(problems), strict)


# -- metrics -------------------------------------------------------------------


@dataclass(frozen=True)
class MissionSatisfaction:
    mission_id: str
    T_S: Fraction
    T_R: Fraction

    @property
    def ratio(self) -> Fraction | None:
        return None if self.T_R == 0 else self.T_S / self.T_R

    @property
    def residual(self) -> Fraction | None:
        r = self.ratio
        return None if r is None else max(Fraction(0), 1 - r)


def distance(u_rms: float, u_max: float, u_avg: float, u_prio: float | None = None) -> float:
    """Euclidean distance in (U_RMS, U_MAX, 1/U_AVG[, 1/U_PRIO]) space."""
    if u_avg <= 0 or (u_prio is not None and u_prio <= 0):
        return math.inf
    total = u_rms**2 + u_max**2 + 1 / u_avg**2
    if u_prio is not None:
        total += 1 / u_prio**2
    return math.sqrt(total)


@dataclass(frozen=True)
class MetricsReport:
    """Satisfaction statistics; U_* are fractions in [0, 1], not percentages."""

    missions: tuple[MissionSatisfaction, ...]
    hours_satisfied: Fraction
    hours_requested: Fraction
    n_satisfied_requests: int
    n_requests: int
    U_RMS: float
    U_MAX: float
    U_AVG: float
    U_PRIO: float | None = None
    prioritized: frozenset[str] = frozenset()
    excluded_missions: tuple[str, ...] = ()
    valid_tracks_pct: float | None = None
    flagged: bool = False
    notes: tuple[str, ...] = field(default=())

    @property
    def satisfied_time_fraction(self) -> float:
        return float(self.hours_satisfied / self.hours_requested) if self.hours_requested else 0.0

    @property
    def satisfied_request_fraction(self) -> float:
        return self.n_satisfied_requests / self.n_requests if self.n_requests else 0.0

    @property
    def d(self) -> float:
        return distance(self.U_RMS, self.U_MAX, self.U_AVG, self.U_PRIO if self.prioritized else None)

    def satisfactions(self) -> dict[str, Fraction]:
        return {m.mission_id: m.ratio for m in self.missions if m.ratio is not None}

    def to_dict(self) -> dict:
        pct = lambda v: round(100 * v, 1)  # noqa: E731
        doc = {
            "Valid tracks (%)": None if self.valid_tracks_pct is None else round(self.valid_tracks_pct, 1),
            "Hours satisfied": round(float(self.hours_satisfied), 1),
            "Overall satisfied time fraction (%)": pct(self.satisfied_time_fraction),
            "# of satisfied requests": self.n_satisfied_requests,
            "Overall satisfied request fraction (%)": pct(self.satisfied_request_fraction),
            "Avg. satisfied ratios (%)": pct(self.U_AVG),
            "RMS of unsatisfied time fraction": round(self.U_RMS, 2),
            "Max. unsatisfied time fraction (%)": pct(self.U_MAX),
        }
        if self.U_PRIO is not None:
            doc["Prioritized satisfied ratio (%)"] = pct(self.U_PRIO)
        doc["d"] = None if math.isinf(self.d) else round(self.d, 4)
        doc["flagged_invalid"] = self.flagged
        doc["excluded_missions"] = list(self.excluded_missions)
        doc["missions"] = [
            {
                "mission": m.mission_id,
                "T_S_hours": float(m.T_S),
                "T_R_hours": float(m.T_R),
                "ratio": None if m.ratio is None else float(m.ratio),
            }
            for m in self.missions
        ]
        doc["exact"] = {
            "U_RMS": self.U_RMS,
            "U_MAX": self.U_MAX,
            "U_AVG": self.U_AVG,
            "U_PRIO": self.U_PRIO,
            "hours_satisfied": float(self.hours_satisfied),
            "hours_requested": float(self.hours_requested),
        }
        return doc

    def table_lines(self) -> list[str]:
        return [f"{k:<42} {v}" for k, v in self.to_dict().items() if not isinstance(v, (list, dict))]


def metrics_from_hours(
    tracked: Mapping[str, Fraction],
    requested: Mapping[str, Fraction],
    prioritized: Iterable[str] = (),
    **extra,
) -> MetricsReport:
    """Metrics straight from per-mission scheduled and requested hours."""
    prioritized = frozenset(prioritized)
    missions = tuple(
        MissionSatisfaction(m, Fraction(tracked.get(m, 0)), Fraction(requested[m])) for m in sorted(requested)
    )
    counted = [m for m in missions if m.T_R > 0]
    if not counted:
        raise ValueError("no mission requests any time")
    residuals = [float(m.residual) for m in counted]
    ratios = [float(m.ratio) for m in counted]
    prio = [float(m.ratio) for m in counted if m.mission_id in prioritized]
    # without activity detail, count each mission as one request
    extra.setdefault("n_requests", len(counted))
    extra.setdefault("n_satisfied_requests", sum(m.ratio >= 1 for m in counted))
    return MetricsReport(
        missions=missions,
        hours_satisfied=sum((m.T_S for m in missions), Fraction(0)),
        hours_requested=sum((m.T_R for m in missions), Fraction(0)),
        U_RMS=math.sqrt(sum(r * r for r in residuals) / len(residuals)),
        U_MAX=max(residuals),
        U_AVG=sum(ratios) / len(ratios),
        U_PRIO=(sum(prio) / len(prio)) if prio else None,
        prioritized=prioritized,
        excluded_missions=tuple(m.mission_id for m in missions if m.T_R == 0),
        **extra,
    )


def compute_metrics(
    instance: ProblemInstance,
    registry: SplitRegistry | None,
    schedule: Schedule,
    prioritized: Iterable[str] = (),
    validation: ValidationReport | None = None,
) -> MetricsReport:
    """Satisfaction of each mission from tracked time only; setup and teardown do not count."""
    registry = registry or SplitRegistry()
    grid = instance.grid
    originals = [a for a in instance.activities if not a.is_clone]
    requested: dict[str, Fraction] = {m.id: Fraction(0) for m in instance.missions}
    for a in originals:
        requested[a.mission_id] += Fraction(a.d_max, grid.slots_per_hour)
    tracked: dict[str, Fraction] = {m.id: Fraction(0) for m in instance.missions}
    for tr in schedule.tracks:
        tracked[tr.mission_id] += Fraction(tr.tracked_slots, grid.slots_per_hour)

    satisfied = 0
    for a in originals:
        group = registry.group(a.id)
        if a.id in schedule.completed or (group and group[1] in schedule.completed and group[2] in schedule.completed):
            satisfied += 1

    notes = []
    over = [m for m in requested if tracked[m] > requested[m]]
    if over:
        notes.append(f"missions tracked beyond their request: {sorted(over)}")
    flagged = bool(over) or (validation is not None and not validation.ok)
    return metrics_from_hours(
        tracked,
        requested,
        prioritized,
        n_satisfied_requests=satisfied,
        n_requests=len(originals),
        valid_tracks_pct=None if validation is None else validation.valid_fraction,
        flagged=flagged,
        notes=tuple(notes),
    )
