"""Solution files and the CSV tables behind the schedule plots.

A solution file carries the grid, the resources with their maintenance and
the decoded tracks, so every report can be produced from it alone.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from .core import ProblemInstance, Resource, TimeGrid
from .exceptions import ParseError
from .milp import Schedule, Track

SOLUTION_FORMAT = "dsn-solution/1"
REPORT_KINDS = ("gantt", "heatmap", "usage")


@dataclass(frozen=True)
class RunManifest:
    instance_label: str
    instance_hash: str
    config: Mapping
    solver: str
    seed: int | None = None
    created: str = ""

    def to_dict(self) -> dict:
        return {
            "instance_label": self.instance_label,
            "instance_hash": self.instance_hash,
            "config": dict(self.config),
            "solver": self.solver,
            "seed": self.seed,
            "created": self.created or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        }

    @property
    def digest(self) -> str:
        """Content hash of everything but the timestamp."""
        doc = self.to_dict()
        doc.pop("created")
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SolutionFile:
    grid: TimeGrid
    resources: tuple[Resource, ...]
    schedule: Schedule
    manifest: dict
    extra: dict


def solution_to_dict(instance: ProblemInstance, schedule: Schedule, manifest: RunManifest, **extra) -> dict:
    grid = instance.grid
    doc = {
        "format": SOLUTION_FORMAT,
        "manifest": {**manifest.to_dict(), "digest": manifest.digest},
        "grid": {
            "slot_minutes": grid.slot_minutes,
            "horizon_slots": grid.horizon_slots,
            "week_start": grid.origin.strftime("%Y-%m-%dT%H:%M:%SZ"),
        },
        "resources": [
            {"id": r.id, "complex": r.complex, "diameter_m": r.diameter_m, "maintenance": [list(m) for m in r.maintenance]}
            for r in instance.resources
        ],
        "tracks": [t.to_dict() for t in schedule.tracks],
        "completed": sorted(schedule.completed),
    }
    doc.update(extra)
    return doc


def dump_solution(doc: Mapping) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def parse_solution_file(text: str) -> SolutionFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"solution is not JSON: {exc}") from None
    if doc.get("format") != SOLUTION_FORMAT:
        raise ParseError(f"expected format {SOLUTION_FORMAT}, got {doc.get('format')!r}", path="format")
    try:
        g = doc["grid"]
        grid = TimeGrid(
            slot_minutes=g["slot_minutes"],
            horizon_slots=g["horizon_slots"],
            origin=datetime.strptime(g["week_start"], "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc),
        )
        resources = tuple(
            Resource(r["id"], r.get("complex", ""), r.get("diameter_m", 34), tuple(tuple(m) for m in r.get("maintenance", [])))
            for r in doc["resources"]
        )
        schedule = Schedule(tuple(Track.from_dict(t) for t in doc["tracks"]), frozenset(doc.get("completed", [])))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed solution: {exc}") from None
    extra = {k: v for k, v in doc.items() if k not in ("format", "grid", "resources", "tracks", "completed", "manifest")}
    return SolutionFile(grid, resources, schedule, doc.get("manifest", {}), extra)


def load_solution(path) -> SolutionFile:
    return parse_solution_file(Path(path).read_text())


# -- tables --------------------------------------------------------------------


def _hours(slots: int, grid: TimeGrid) -> Fraction:
    return Fraction(slots, grid.slots_per_hour)


def _fmt(h: Fraction) -> str:
    """Exact decimal text; quarter hours and coarser always terminate."""
    if h.denominator in (1, 2, 4, 5, 10, 20, 50, 100):
        return f"{float(h):.2f}"
    return f"{float(h):.6f}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def gantt_rows(schedule: Schedule) -> list[tuple]:
    rows = []
    for t in schedule.tracks:
        for rid in t.resource_ids:
            rows.append((rid, t.mission_id, t.activity_id, t.setup[0], t.track[0], t.track[1], t.teardown[1]))
    return sorted(rows, key=lambda r: (r[0], r[3], r[4], r[1], r[2]))


def gantt_csv(schedule: Schedule) -> str:
    header = ("resource", "mission", "activity", "setup_start", "track_start", "track_end", "teardown_end")
    return _csv(header, gantt_rows(schedule))


def heatmap(schedule: Schedule, grid: TimeGrid, resources) -> tuple[list[str], list[str], dict]:
    cells: dict[tuple[str, str], int] = defaultdict(int)
    for t in schedule.tracks:
        for rid in t.resource_ids:
            cells[t.mission_id, rid] += t.tracked_slots
    missions = sorted({m for m, _ in cells})
    antennas = [r.id for r in resources]
    return missions, antennas, {k: _hours(v, grid) for k, v in cells.items()}


def heatmap_csv(schedule: Schedule, grid: TimeGrid, resources) -> str:
    missions, antennas, cells = heatmap(schedule, grid, resources)
    rows = [[m] + [_fmt(cells.get((m, a), Fraction(0))) for a in antennas] for m in missions]
    return _csv(["mission"] + antennas, rows)


@dataclass(frozen=True)
class UsageRow:
    resource: str
    communication: Fraction
    available: Fraction
    maintenance: Fraction

    @property
    def total(self) -> Fraction:
        return self.communication + self.available + self.maintenance


def usage(schedule: Schedule, grid: TimeGrid, resources) -> list[UsageRow]:
    """Per antenna, every slot is maintenance, else busy (setup, track or teardown), else free."""
    H = grid.horizon_slots
    busy: dict[str, set[int]] = defaultdict(set)
    for t in schedule.tracks:
        lo, hi = max(t.span[0], 0), min(t.span[1], H)
        for rid in t.resource_ids:
            busy[rid].update(range(lo, hi))
    out = []
    for r in resources:
        maint = {s for s in r.maintenance_slots if 0 <= s < H}
        comm = busy[r.id] - maint
        free = H - len(maint) - len(comm)
        out.append(UsageRow(r.id, _hours(len(comm), grid), _hours(free, grid), _hours(len(maint), grid)))
    return out


def usage_csv(schedule: Schedule, grid: TimeGrid, resources) -> str:
    rows = [
        (u.resource, _fmt(u.communication), _fmt(u.available), _fmt(u.maintenance), _fmt(u.total))
        for u in usage(schedule, grid, resources)
    ]
    return _csv(("resource", "communication_h", "available_h", "maintenance_h", "total_h"), rows)


def render_report(solution: SolutionFile, kind: str) -> str:
    if kind == "gantt":
        return gantt_csv(solution.schedule)
    if kind == "heatmap":
        return heatmap_csv(solution.schedule, solution.grid, solution.resources)
    if kind == "usage":
        return usage_csv(solution.schedule, solution.grid, solution.resources)
    raise ValueError(f"unknown report kind {kind!r}; choose from {', '.join(REPORT_KINDS)}")
