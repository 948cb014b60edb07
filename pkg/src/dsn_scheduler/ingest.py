"""Instance files, the synthetic week generator, and Table-I style summaries."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import jsonschema
import numpy as np

from .core import (
    WEEK_MINUTES,
    Activity,
    Mission,
    ProblemInstance,
    Resource,
    TimeGrid,
    ViewPeriod,
    check_integrity,
    hours_to_slots,
    slots_to_hours,
)
from .exceptions import GenerationError, ParseError, QuantizationError
from .profiles import COMPLEX_TRANSIT_OFFSET_H, MissionProfile

_interval = {
    "type": "array",
    "items": {"type": "integer", "minimum": 0},
    "minItems": 2,
    "maxItems": 2,
}
_hours = {"anyOf": [{"type": "number", "exclusiveMinimum": 0}, {"type": "string", "pattern": r"^\d+(/\d+)?$"}]}

INSTANCE_SCHEMA = {
    "type": "object",
    "required": ["grid", "resources", "missions", "activities", "view_periods"],
    "properties": {
        "label": {"type": "string"},
        "grid": {
            "type": "object",
            "required": ["slot_minutes", "week_start"],
            "properties": {
                "slot_minutes": {"type": "integer"},
                "week_start": {"type": "string"},
                "horizon_slots": {"type": "integer", "minimum": 1},
            },
        },
        "resources": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id"],
                "properties": {
                    "id": {"type": "string"},
                    "complex": {"type": "string"},
                    "diameter_m": {"type": "integer"},
                    "maintenance": {"type": "array", "items": _interval},
                },
            },
        },
        "missions": {
            "type": "array",
            "items": {"type": "object", "required": ["id"], "properties": {"id": {"type": "string"}}},
        },
        "activities": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "mission", "d_min_h", "d_max_h", "setup_min", "teardown_min", "view_periods"],
                "properties": {
                    "id": {"type": "string"},
                    "mission": {"type": "string"},
                    "d_min_h": _hours,
                    "d_max_h": _hours,
                    "setup_min": {"type": "integer", "minimum": 0},
                    "teardown_min": {"type": "integer", "minimum": 0},
                    "min_up_slots": {"type": "integer", "minimum": 0},
                    "min_down_slots": {"type": "integer", "minimum": 0},
                    "view_periods": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "view_periods": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "resources", "windows"],
                "properties": {
                    "id": {"type": "string"},
                    "resources": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                    "windows": {"type": "array", "items": _interval},
                },
            },
        },
    },
}


def _hours_value(value) -> Fraction:
    return Fraction(value) if isinstance(value, str) else Fraction(str(value))


def _hours_json(hours: Fraction):
    den = hours.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den == 1:
        return float(hours) if hours.denominator != 1 else int(hours)
    return f"{hours.numerator}/{hours.denominator}"


def _parse_datetime(text: str) -> datetime:
    stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def instance_from_dict(doc: Mapping) -> ProblemInstance:
    validator = jsonschema.Draft7Validator(INSTANCE_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ParseError(err.message, path=path)

    g = doc["grid"]
    slot = g["slot_minutes"]
    try:
        grid = TimeGrid(
            slot_minutes=slot,
            horizon_slots=g.get("horizon_slots", WEEK_MINUTES // slot if slot else 0),
            origin=_parse_datetime(g["week_start"]),
        )
    except ValueError as exc:
        raise ParseError(str(exc), path="grid/week_start") from exc

    resources = tuple(
        Resource(
            id=r["id"],
            complex=r.get("complex", ""),
            diameter_m=r.get("diameter_m", 34),
            maintenance=tuple(tuple(iv) for iv in r.get("maintenance", [])),
        )
        for r in doc["resources"]
    )
    view_periods = tuple(
        ViewPeriod(id=v["id"], resource_ids=tuple(v["resources"]), windows=tuple(tuple(w) for w in v["windows"]))
        for v in doc["view_periods"]
    )
    activities = []
    for i, a in enumerate(doc["activities"]):
        path = f"activities/{i}"
        try:
            activities.append(
                Activity(
                    id=a["id"],
                    mission_id=a["mission"],
                    d_min=hours_to_slots(_hours_value(a["d_min_h"]), grid),
                    d_max=hours_to_slots(_hours_value(a["d_max_h"]), grid),
                    setup=_minutes_to_slots(a["setup_min"], grid),
                    teardown=_minutes_to_slots(a["teardown_min"], grid),
                    view_period_ids=tuple(a["view_periods"]),
                    min_up=a.get("min_up_slots"),
                    min_down=a.get("min_down_slots"),
                )
            )
        except QuantizationError as exc:
            raise QuantizationError(f"{path}: {exc}") from exc
    members: dict[str, list[str]] = {m["id"]: [] for m in doc["missions"]}
    for a in activities:
        members.setdefault(a.mission_id, [])
        members[a.mission_id].append(a.id)
    missions = tuple(Mission(id=m["id"], activity_ids=tuple(members[m["id"]])) for m in doc["missions"])
    instance = ProblemInstance(
        grid=grid,
        missions=missions,
        activities=tuple(activities),
        resources=resources,
        view_periods=view_periods,
        label=doc.get("label", ""),
    )
    check_integrity(instance)
    return instance


def _minutes_to_slots(minutes: int, grid: TimeGrid) -> int:
    if minutes % grid.slot_minutes:
        raise QuantizationError(f"{minutes} min is not a multiple of the {grid.slot_minutes}-min slot")
    return minutes // grid.slot_minutes


def parse_instance(data: bytes | str) -> ProblemInstance:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return instance_from_dict(doc)


def load_instance(path) -> ProblemInstance:
    return parse_instance(Path(path).read_bytes())


def instance_to_dict(instance: ProblemInstance) -> dict:
    """Serialize original requests only; split clones are never written out."""
    grid = instance.grid
    originals = [a for a in instance.activities if not a.is_clone]
    keep_vps = {v for a in originals for v in a.view_period_ids}

    def activity_doc(a: Activity) -> dict:
        doc = {
            "id": a.id,
            "mission": a.mission_id,
            "d_min_h": _hours_json(slots_to_hours(a.d_min, grid)),
            "d_max_h": _hours_json(slots_to_hours(a.d_max, grid)),
            "setup_min": a.setup * grid.slot_minutes,
            "teardown_min": a.teardown * grid.slot_minutes,
            "view_periods": list(a.view_period_ids),
        }
        if a.min_up is not None:
            doc["min_up_slots"] = a.min_up
        if a.min_down is not None:
            doc["min_down_slots"] = a.min_down
        return doc

    return {
        "label": instance.label,
        "grid": {
            "slot_minutes": grid.slot_minutes,
            "week_start": grid.origin.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "horizon_slots": grid.horizon_slots,
        },
        "resources": [
            {"id": r.id, "complex": r.complex, "diameter_m": r.diameter_m, "maintenance": [list(iv) for iv in r.maintenance]}
            for r in instance.resources
        ],
        "missions": [{"id": m.id} for m in instance.missions],
        "activities": [activity_doc(a) for a in originals],
        "view_periods": [
            {"id": v.id, "resources": list(v.resource_ids), "windows": [list(w) for w in v.windows]}
            for v in instance.view_periods
            if v.id in keep_vps
        ],
    }


def dump_instance(instance: ProblemInstance) -> bytes:
    return (json.dumps(instance_to_dict(instance), indent=1) + "\n").encode()


def instance_hash(instance: ProblemInstance) -> str:
    canonical = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class InstanceSummary:
    n_resources: int
    n_activities: int
    requested_hours: float
    n_missions: int

    def table_row(self) -> tuple[int, int, int, int]:
        """Whole-hour presentation used by the published dataset table."""
        return (self.n_resources, self.n_activities, round(self.requested_hours), self.n_missions)


def summarize(instance: ProblemInstance) -> InstanceSummary:
    originals = [a for a in instance.activities if not a.is_clone]
    return InstanceSummary(
        n_resources=len(instance.resources),
        n_activities=len(originals),
        requested_hours=float(slots_to_hours(sum(a.d_max for a in originals), instance.grid)),
        n_missions=len(instance.missions),
    )


# -- profile files -----------------------------------------------------------

PROFILE_COLUMNS = ("Mission", "T_R (hrs)", "n_a", "d_min (hrs)", "d_max (hrs)", "setup (mins)", "teardown (mins)")


def read_profiles(text: str) -> list[MissionProfile]:
    """Parse a CSV whose header carries the per-mission table columns.

    An optional ``diameters`` column holds a ``;``-separated list of allowed
    antenna diameters.
    """
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in PROFILE_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ParseError(f"profile file lacks columns {missing}")
    profiles = []
    for lineno, row in enumerate(reader, start=2):
        try:
            diam = row.get("diameters") or ""
            profiles.append(
                MissionProfile(
                    mission_id=row["Mission"].strip(),
                    T_R=float(row["T_R (hrs)"]),
                    n_a=int(row["n_a"]),
                    d_min_avg=float(row["d_min (hrs)"]),
                    d_max_avg=float(row["d_max (hrs)"]),
                    setup_avg=float(row["setup (mins)"]),
                    teardown_avg=float(row["teardown (mins)"]),
                    allowed_diameters=tuple(int(x) for x in diam.split(";") if x) or None,
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc), path=f"line {lineno}") from exc
    return profiles


def write_profiles(profiles: Sequence[MissionProfile]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(PROFILE_COLUMNS + ("diameters",))
    for p in profiles:
        writer.writerow(
            [p.mission_id, p.T_R, p.n_a, p.d_min_avg, p.d_max_avg, p.setup_avg, p.teardown_avg,
             ";".join(str(d) for d in p.allowed_diameters or ())]
        )
    return out.getvalue()


# -- synthetic generator -----------------------------------------------------


def _spread(total: int, n: int) -> list[int]:
    base, rem = divmod(total, n)
    return [base + (1 if i < rem else 0) for i in range(n)]


def _round_slots(value: Fraction) -> int:
    return int(value.numerator * 2 + value.denominator) // (2 * value.denominator)


def _profile_durations(p: MissionProfile, grid: TimeGrid, split_slots: int):
    """Per-activity (d_min, d_max, setup, teardown) slot lists for one profile."""
    per_hour = Fraction(60, grid.slot_minutes)
    n = p.n_a
    total_max = _round_slots(Fraction(str(p.T_R)) * per_hour)
    total_min = _round_slots(Fraction(str(p.d_min_avg)) * n * per_hour)
    if total_max < n:
        raise GenerationError(f"{p.mission_id}: T_R={p.T_R} h cannot cover {n} activities")
    if total_min > total_max:
        raise GenerationError(f"{p.mission_id}: T_R={p.T_R} h is below n_a * d_min_avg")
    d_max = _spread(total_max, n)
    d_min = _spread(max(total_min, n), n)

    # Split clones halve d_max, so split-eligible lengths must be even.
    odd = [i for i in range(n) if d_max[i] >= split_slots and d_max[i] % 2]
    while len(odd) >= 2:
        i, j = odd.pop(), odd.pop()
        d_max[i] += 1
        d_max[j] -= 1
    if odd:
        k = odd.pop()
        receivers = [i for i in range(n) if d_max[i] < split_slots]
        if not receivers:
            raise GenerationError(f"{p.mission_id}: cannot make split-eligible durations even")
        d_max[k] -= 1
        d_max[receivers[-1]] += 1
    for i in range(n):
        if d_min[i] > d_max[i]:
            surplus = d_min[i] - d_max[i]
            d_min[i] = d_max[i]
            for j in range(n):
                room = d_max[j] - d_min[j]
                if surplus and room > 0:
                    moved = min(room, surplus)
                    d_min[j] += moved
                    surplus -= moved
        if d_min[i] > split_slots and d_min[i] % 2:
            d_min[i] -= 1

    setup = _spread(_round_slots(Fraction(str(p.setup_avg)) * n / grid.slot_minutes), n)
    teardown = _spread(_round_slots(Fraction(str(p.teardown_avg)) * n / grid.slot_minutes), n)
    return d_min, d_max, setup, teardown


def generate_synthetic(
    profiles: Sequence[MissionProfile],
    resources: Sequence[Resource],
    availability: Mapping[str, Sequence[int]],
    seed: int = 0,
    grid: TimeGrid | None = None,
    label: str = "synthetic",
) -> ProblemInstance:
    """Build a week of requests whose per-mission means match ``profiles``.

    ``availability[r][d]`` is the number of view periods antenna ``r`` offers
    on day ``d``; a zero makes that antenna-day a maintenance block. Every
    activity gets private copies of its mission's view periods on the
    activity's own day (or the nearest day with any).
    """
    if not profiles:
        raise GenerationError("at least one mission profile is required")
    grid = grid or TimeGrid()
    spd = 24 * grid.slots_per_hour
    horizon = grid.horizon_slots
    if horizon != 7 * spd:
        raise GenerationError("the generator needs a full-week grid")
    rng = np.random.default_rng(seed)
    split_slots = 8 * grid.slots_per_hour

    res_by_id = {r.id: r for r in resources}
    for rid in availability:
        if rid not in res_by_id:
            raise GenerationError(f"availability lists unknown resource {rid!r}")

    maintained = []
    for r in resources:
        counts = tuple(availability.get(r.id, (0,) * 7))
        blocks: list[list[int]] = []
        for d, c in enumerate(counts):
            if c == 0:
                if blocks and blocks[-1][1] == d * spd:
                    blocks[-1][1] = (d + 1) * spd
                else:
                    blocks.append([d * spd, (d + 1) * spd])
        maintained.append(Resource(r.id, r.complex, r.diameter_m, tuple(tuple(b) for b in blocks) or r.maintenance))

    durations = {p.mission_id: _profile_durations(p, grid, split_slots) for p in profiles}
    need = {
        mid: max(dmx + su + td for dmx, su, td in zip(v[1], v[2], v[3]))
        for mid, v in durations.items()
    }
    phase = {p.mission_id: int(rng.integers(0, spd)) for p in profiles}

    def eligible(p: MissionProfile, r: Resource) -> bool:
        return p.allowed_diameters is None or r.diameter_m in p.allowed_diameters

    cells = [
        [r, d, int(availability.get(r.id, (0,) * 7)[d]), []]
        for r in maintained
        for d in range(7)
        if availability.get(r.id, (0,) * 7)[d] > 0
    ]

    # Every mission sees at least one antenna-day, then the remaining capacity
    # is drawn in proportion to requested hours.
    for idx in rng.permutation(len(profiles)):
        p = profiles[int(idx)]
        options = [c for c in cells if c[2] > len(c[3]) and eligible(p, c[0])]
        if not options:
            raise GenerationError(f"no antenna with spare view periods can serve {p.mission_id}")
        options[int(rng.integers(len(options)))][3].append(p.mission_id)
    by_id = {p.mission_id: p for p in profiles}
    for cell in cells:
        r, _, cap, chosen = cell
        pool = [p for p in profiles if eligible(p, r) and p.mission_id not in chosen]
        k = min(cap - len(chosen), len(pool))
        if k <= 0:
            continue
        weights = np.array([p.T_R for p in pool], dtype=float)
        picks = rng.choice(len(pool), size=k, replace=False, p=weights / weights.sum())
        chosen.extend(pool[int(i)].mission_id for i in sorted(picks))

    slack_lo, slack_hi = grid.slots_per_hour // 2 or 1, 2 * grid.slots_per_hour
    jitter = max(1, grid.slots_per_hour // 2)
    passes: dict[str, list[tuple[int, int, tuple[str, ...], int]]] = {p.mission_id: [] for p in profiles}
    for r, d, _, chosen in cells:
        offset = COMPLEX_TRANSIT_OFFSET_H.get(r.complex, 0) * grid.slots_per_hour
        for mid in chosen:
            p = by_id[mid]
            length = min(horizon, need[mid] + int(rng.integers(slack_lo, slack_hi + 1)))
            center = d * spd + (phase[mid] + offset) % spd + int(rng.integers(-jitter, jitter + 1))
            start = min(max(center - length // 2, 0), horizon - length)
            members = (r.id,)
            if p.array_size > 1:
                peers = sorted(
                    c[0].id for c in cells
                    if c[1] == d and c[0].complex == r.complex and c[0].id != r.id and eligible(p, c[0])
                )
                members = (r.id, *peers[: p.array_size - 1])
            passes[mid].append((d, start, members, start + length))

    activities, view_periods, missions = [], [], []
    for p in profiles:
        d_min, d_max, setup, teardown = durations[p.mission_id]
        mission_passes = sorted(passes[p.mission_id], key=lambda x: (x[0], x[1], x[2]))
        days = sorted({x[0] for x in mission_passes})
        ids = []
        for i in range(p.n_a):
            aid = f"{p.mission_id}-{i + 1:02d}"
            ids.append(aid)
            want = (i * 7) // p.n_a
            day = min(days, key=lambda dd: (abs(dd - want), dd))
            vp_ids = []
            for k, (_, s, members, e) in enumerate(x for x in mission_passes if x[0] == day):
                vid = f"{aid}/v{k + 1}"
                vp_ids.append(vid)
                view_periods.append(ViewPeriod(vid, tuple(members), ((s, e),)))
            activities.append(
                Activity(
                    id=aid, mission_id=p.mission_id, d_min=d_min[i], d_max=d_max[i],
                    setup=setup[i], teardown=teardown[i], view_period_ids=tuple(vp_ids),
                )
            )
        missions.append(Mission(p.mission_id, tuple(ids)))

    instance = ProblemInstance(
        grid=grid,
        missions=tuple(missions),
        activities=tuple(activities),
        resources=tuple(maintained),
        view_periods=tuple(view_periods),
        label=label,
    )
    check_integrity(instance)
    return instance


def w44_2016_instance(seed: int = 0) -> ProblemInstance:
    from .profiles import W44_2016_AVAILABILITY, dsn_resources, w44_2016_profiles

    return generate_synthetic(
        w44_2016_profiles(), dsn_resources(2016), W44_2016_AVAILABILITY, seed=seed, label="W44-2016-synthetic"
    )


def desk_instance(seed: int = 0) -> ProblemInstance:
    from .profiles import desk_availability, desk_profiles, desk_resources

    return generate_synthetic(desk_profiles(), desk_resources(), desk_availability(), seed=seed, label="desk-week")


def week_instance(week: str, seed: int = 0) -> ProblemInstance:
    """Synthetic stand-in for one of the published weeks, matched on totals only."""
    from .profiles import WEEK_TOTALS, dsn_resources, profiles_from_totals, uniform_availability

    if week == "W44-2016":
        return w44_2016_instance(seed)
    n_res, n_act, hours, n_mis = WEEK_TOTALS[week]
    resources = dsn_resources(2018 if week.endswith("2018") else 2016)[:n_res]
    return generate_synthetic(
        profiles_from_totals(n_act, hours, n_mis), resources, uniform_availability(resources, 4),
        seed=seed, label=f"{week}-synthetic",
    )
