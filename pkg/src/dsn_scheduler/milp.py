"""Assembly of the time-indexed 0/1 program and decoding of its solutions.

Variables live in one flat index space. Per view period ``v`` and slot ``t``
the families are

    X   tracking on v at t
    Xu  a track on v starts at t       (X[t-1] = 0, X[t] = 1)
    Xd  a track on v has ended at t    (X[t-1] = 1, X[t] = 0)
    Yu  v is in setup at t
    Yd  v is in teardown at t

plus one completion flag ``x`` per activity. Cells that can never be 1 are
not instantiated at all: X only exists where the view period is open, clear
of maintenance, late enough for the setup to fit after slot 0 and early
enough for the teardown to end inside the horizon.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .core import ProblemInstance, availability_mask
from .exceptions import DecodeError, ModelError
from .splitter import SplitRegistry, xor_constraints

log = logging.getLogger(__name__)

FAMILIES = ("X", "Xu", "Xd", "Yu", "Yd")
TAG_ORDER = ("2c", "2d", "2e", "2f", "2g", "2h", "2i", "2j", "2k", "2l", "2m", "single")
NEW_CONSTRAINT_TAGS = frozenset({"2j", "2k", "2l", "2m"})


def parse_ablation(spec: str | Iterable[str] | None) -> frozenset[str]:
    """Turn ``"2j,2k-2m"`` into ``{"2j", "2k", "2l", "2m"}``."""
    if not spec:
        return frozenset()
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    tags = set()
    for item in items:
        item = item.strip()
        if not item:
            continue
        if "-" in item:
            lo, hi = item.split("-")
            if lo[:-1] != hi[:-1] or not lo[:-1]:
                raise ModelError(f"bad ablation range {item!r}")
            tags.update(f"{lo[:-1]}{chr(c)}" for c in range(ord(lo[-1]), ord(hi[-1]) + 1))
        else:
            tags.add(item)
    unknown = tags - set(TAG_ORDER)
    if unknown:
        raise ModelError(f"unknown constraint tags {sorted(unknown)}")
    return frozenset(tags)


@dataclass(frozen=True)
class ModelConfig:
    single_interval: bool = False
    ablate: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Weights:
    """Objective coefficients: ``c1`` per activity, ``c2`` per view period."""

    c1: Mapping[str, float]
    c2: Mapping[str, float]

    @classmethod
    def uniform(cls, instance: ProblemInstance, value: float = 1.0) -> "Weights":
        return cls(
            c1={a.id: value for a in instance.activities},
            c2={v.id: value for v in instance.view_periods},
        )


@dataclass
class VariableSpace:
    keys: list[tuple] = field(default_factory=list)
    names: list[str] = field(default_factory=list)
    index: dict[tuple, int] = field(default_factory=dict)

    def add(self, key: tuple, name: str) -> int:
        idx = len(self.keys)
        self.keys.append(key)
        self.names.append(name)
        self.index[key] = idx
        return idx

    def get(self, key: tuple) -> int | None:
        return self.index.get(key)

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def name_index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}


@dataclass(frozen=True)
class MilpModel:
    """A maximization over binaries: ``max c.z`` s.t. rows of ``A z (<=|>=|=) rhs``."""

    variables: VariableSpace
    objective: np.ndarray
    A: sparse.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    tags: np.ndarray
    instance: ProblemInstance | None = None
    registry: SplitRegistry | None = None
    activity_ids: tuple[str, ...] = ()
    view_period_ids: tuple[str, ...] = ()
    dense_binaries: int = 0
    warnings: tuple[str, ...] = ()
    config: ModelConfig = ModelConfig()

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def var(self, family: str, vp_id: str, t: int) -> int | None:
        return self.variables.get((family, self._vp_ordinal[vp_id], t))

    def x(self, activity_id: str) -> int | None:
        return self.variables.get(("x", activity_id))

    def is_fixed_zero(self, family: str, vp_id: str, t: int) -> bool:
        return self.var(family, vp_id, t) is None

    @property
    def _vp_ordinal(self) -> dict[str, int]:
        cache = self.__dict__.get("_vp_ord")
        if cache is None:
            cache = {v: j for j, v in enumerate(self.view_period_ids)}
            object.__setattr__(self, "_vp_ord", cache)
        return cache

    def with_weights(self, weights: Weights) -> "MilpModel":
        return replace(self, objective=objective_vector(self, weights))


def objective_vector(model: MilpModel, weights: Weights) -> np.ndarray:
    c = np.zeros(model.n_vars)
    for key, idx in model.variables.index.items():
        if key[0] == "x":
            c[idx] = weights.c1.get(key[1], 0.0)
        elif key[0] == "X":
            c[idx] = weights.c2.get(model.view_period_ids[key[1]], 0.0)
    return c


def generic_model(names: list[str], objective: Mapping[str, float], rows) -> MilpModel:
    """Build a model from ``(terms, sense, rhs, tag)`` rows over named binaries.

    ``terms`` maps variable names to integer coefficients. Used for hand-made
    models in tests and by the MPS reader.
    """
    space = VariableSpace()
    for n in names:
        space.add(("raw", n), n)
    pos = space.name_index
    builder = _RowBuilder()
    for terms, sense, rhs, tag in rows:
        builder.add(tag, [(pos[n], c) for n, c in terms.items()], sense, rhs)
    A, sense, rhs, tags = builder.finish(len(names))
    obj = np.array([objective.get(n, 0.0) for n in names], dtype=float)
    return MilpModel(variables=space, objective=obj, A=A, sense=sense, rhs=rhs, tags=tags,
                     dense_binaries=len(names))


class _RowBuilder:
    def __init__(self):
        self.rows: dict[str, list] = {}

    def add(self, tag: str, terms: list[tuple[int, int]], sense: str, rhs: int) -> None:
        self.rows.setdefault(tag, []).append((terms, sense, rhs))

    def finish(self, n_vars: int):
        order = [t for t in TAG_ORDER if t in self.rows] + sorted(t for t in self.rows if t not in TAG_ORDER)
        r_idx, c_idx, vals, senses, rhss, tags = [], [], [], [], [], []
        row = 0
        for tag in order:
            for terms, sense, rhs in self.rows[tag]:
                for col, coef in terms:
                    r_idx.append(row)
                    c_idx.append(col)
                    vals.append(coef)
                senses.append(sense)
                rhss.append(rhs)
                tags.append(tag)
                row += 1
        A = sparse.csr_matrix(
            (np.array(vals, dtype=np.int64), (np.array(r_idx, dtype=np.int64), np.array(c_idx, dtype=np.int64))),
            shape=(row, n_vars),
        )
        A.sum_duplicates()
        return A, np.array(senses, dtype="<U2"), np.array(rhss, dtype=np.int64), np.array(tags, dtype="<U8")


def _allowed_track_slots(instance: ProblemInstance, vp, setup: int, teardown: int) -> np.ndarray:
    mask = availability_mask(instance, vp)
    mask[: min(setup, mask.size)] = False
    if teardown:
        mask[max(mask.size - teardown, 0):] = False
    return np.flatnonzero(mask)


def _longest_run(slots: np.ndarray) -> int:
    if slots.size == 0:
        return 0
    breaks = np.flatnonzero(np.diff(slots) != 1)
    edges = np.concatenate(([-1], breaks, [slots.size - 1]))
    return int(np.max(np.diff(edges)))


def build_model(
    expanded: ProblemInstance,
    registry: SplitRegistry | None = None,
    weights: Weights | None = None,
    config: ModelConfig | None = None,
) -> MilpModel:
    registry = registry or SplitRegistry()
    config = config or ModelConfig()
    weights = weights or Weights.uniform(expanded)
    missing_c1 = [a.id for a in expanded.activities if a.id not in weights.c1]
    missing_c2 = [v.id for v in expanded.view_periods if v.id not in weights.c2]
    if missing_c1 or missing_c2:
        raise ModelError(
            f"weights do not cover the instance: {len(missing_c1)} activities, {len(missing_c2)} view periods missing"
        )

    H = expanded.grid.horizon_slots
    space = VariableSpace()
    rows = _RowBuilder()
    skip = config.ablate
    warnings = []

    act_ordinal = {a.id: i for i, a in enumerate(expanded.activities)}
    vp_ordinal = {v.id: j for j, v in enumerate(expanded.view_periods)}
    for a in expanded.activities:
        space.add(("x", a.id), f"x_a{act_ordinal[a.id]}")

    occupancy_by_vp: dict[int, dict[int, list[int]]] = {}
    tracked_by_activity: dict[str, list[int]] = {a.id: [] for a in expanded.activities}

    for a in expanded.activities:
        gamma_up = max(a.gamma_up, 1)
        gamma_down = max(a.gamma_down, 1)
        runs = []
        for vid in a.view_period_ids:
            j = vp_ordinal[vid]
            vp = expanded.view_period_by_id[vid]
            slots = _allowed_track_slots(expanded, vp, a.setup, a.teardown)
            runs.append(_longest_run(slots))
            if slots.size == 0:
                continue
            X = {int(t): space.add(("X", j, int(t)), f"X_v{j}_t{t}") for t in slots}
            Xu = {t: space.add(("Xu", j, t), f"Xu_v{j}_t{t}") for t in X}
            Xd = {t + 1: space.add(("Xd", j, t + 1), f"Xd_v{j}_t{t + 1}") for t in X if t + 1 < H}
            yu_slots = sorted({t - k for t in Xu for k in range(1, a.setup + 1)})
            yd_slots = sorted({t + k for t in Xd for k in range(a.teardown)})
            Yu = {t: space.add(("Yu", j, t), f"Yu_v{j}_t{t}") for t in yu_slots}
            Yd = {t: space.add(("Yd", j, t), f"Yd_v{j}_t{t}") for t in yd_slots}
            tracked_by_activity[a.id].extend(X.values())
            xu_sorted = sorted(Xu)
            xd_sorted = sorted(Xd)

            # X[t] - X[t-1] = Xu[t] - Xd[t], with X[-1] = 0
            for t in sorted(set(X) | set(Xd)):
                terms = []
                if t in X:
                    terms.append((X[t], 1))
                if t - 1 in X:
                    terms.append((X[t - 1], -1))
                if t in Xu:
                    terms.append((Xu[t], -1))
                if t in Xd:
                    terms.append((Xd[t], 1))
                rows.add("2c", terms, "=", 0)

            # Rolling minimum up time; the tau = t term is implied by the start definition.
            for t in sorted({t + k for t in xu_sorted for k in range(gamma_up) if t + k < H}):
                lo = bisect.bisect_left(xu_sorted, t - gamma_up + 1)
                hi = bisect.bisect_right(xu_sorted, t)
                terms = [(Xu[tau], 1) for tau in xu_sorted[lo:hi]]
                if t in X:
                    terms.append((X[t], -1))
                rows.add("2d", terms, "<=", 0)

            # Rolling minimum down time; likewise the tau = t term follows from the end definition.
            for t in sorted({t + k for t in xd_sorted for k in range(gamma_down) if t + k < H}):
                lo = bisect.bisect_left(xd_sorted, t - gamma_down + 1)
                hi = bisect.bisect_right(xd_sorted, t)
                terms = [(Xd[tau], 1) for tau in xd_sorted[lo:hi]]
                if t in X:
                    terms.append((X[t], 1))
                rows.add("2e", terms, "<=", 1)

            for t, idx in Yu.items():
                lo = bisect.bisect_left(xu_sorted, t + 1)
                hi = bisect.bisect_right(xu_sorted, t + a.setup)
                rows.add("2f", [(idx, 1)] + [(Xu[tau], -1) for tau in xu_sorted[lo:hi]], "=", 0)
            for t, idx in Yd.items():
                lo = bisect.bisect_left(xd_sorted, t + 1 - a.teardown)
                hi = bisect.bisect_right(xd_sorted, t)
                rows.add("2g", [(idx, 1)] + [(Xd[tau], -1) for tau in xd_sorted[lo:hi]], "=", 0)

            if config.single_interval and len(Xu) > 1 and "single" not in skip:
                rows.add("single", [(idx, 1) for idx in Xu.values()], "<=", 1)

            occ: dict[int, list[int]] = {}
            for fam in (Yd, X, Yu):
                for t, idx in fam.items():
                    occ.setdefault(t, []).append(idx)
            occupancy_by_vp[j] = occ

        if not runs or max(runs) < a.d_min:
            warnings.append(f"activity {a.id} is structurally unschedulable (no view period fits {a.d_min} tracking slots)")

    def add_occupancy(tag: str, groups: Mapping[str, list[int]]):
        for _, vp_list in groups.items():
            per_t: dict[int, list[int]] = {}
            for j in vp_list:
                for t, idxs in occupancy_by_vp.get(j, {}).items():
                    per_t.setdefault(t, []).extend(idxs)
            for t in sorted(per_t):
                idxs = per_t[t]
                if len(idxs) > 1:
                    rows.add(tag, [(i, 1) for i in idxs], "<=", 1)

    if "2h" not in skip:
        by_resource: dict[str, list[int]] = {r.id: [] for r in expanded.resources}
        for v in expanded.view_periods:
            for rid in v.resource_ids:
                by_resource[rid].append(vp_ordinal[v.id])
        add_occupancy("2h", by_resource)

    if "2i" not in skip:
        for a in expanded.activities:
            xa = space.index[("x", a.id)]
            tracked = tracked_by_activity[a.id]
            rows.add("2i", [(i, 1) for i in tracked] + [(xa, -a.d_min)], ">=", 0)
            rows.add("2i", [(i, 1) for i in tracked] + [(xa, -a.d_max)], "<=", 0)

    if "2j" not in skip:
        by_mission: dict[str, list[int]] = {m.id: [] for m in expanded.missions}
        for a in expanded.activities:
            by_mission[a.mission_id].extend(vp_ordinal[v] for v in a.view_period_ids)
        add_occupancy("2j", by_mission)

    for con in xor_constraints(registry):
        if con.tag in skip:
            continue
        rows.add(con.tag, [(space.index[key], coef) for key, coef in con.terms], con.sense, con.rhs)

    A, sense, rhs, tags = rows.finish(len(space))
    for w in warnings:
        log.warning(w)
    model = MilpModel(
        variables=space,
        objective=np.zeros(len(space)),
        A=A,
        sense=sense,
        rhs=rhs,
        tags=tags,
        instance=expanded,
        registry=registry,
        activity_ids=tuple(act_ordinal),
        view_period_ids=tuple(vp_ordinal),
        dense_binaries=len(expanded.activities) + 5 * len(expanded.view_periods) * H,
        warnings=tuple(warnings),
        config=config,
    )
    return model.with_weights(weights)


@dataclass(frozen=True)
class ModelCount:
    n_binaries: int
    n_binaries_dense: int
    n_constraints: int
    n_constraints_by_tag: dict[str, int]


def count_model(model: MilpModel) -> ModelCount:
    tags, counts = np.unique(model.tags, return_counts=True) if model.n_rows else ((), ())
    return ModelCount(
        n_binaries=model.n_vars,
        n_binaries_dense=model.dense_binaries,
        n_constraints=model.n_rows,
        n_constraints_by_tag={str(t): int(c) for t, c in zip(tags, counts)},
    )


# -- assignments -------------------------------------------------------------


def assignment_vector(model: MilpModel, values: Mapping[str, float]) -> np.ndarray:
    """Dense 0/1 vector for a name-keyed assignment; unknown names must be zero."""
    vec = np.zeros(model.n_vars, dtype=np.int64)
    pos = model.variables.name_index
    for name, value in values.items():
        idx = pos.get(name)
        if idx is None:
            if value:
                raise DecodeError(f"assignment sets {name}, which the model fixes to zero", tag="2b")
            continue
        vec[idx] = int(value)
    return vec


def violated_rows(model: MilpModel, vec: np.ndarray) -> np.ndarray:
    lhs = model.A @ vec
    bad = np.zeros(model.n_rows, dtype=bool)
    bad |= (model.sense == "<=") & (lhs > model.rhs)
    bad |= (model.sense == ">=") & (lhs < model.rhs)
    bad |= (model.sense == "=") & (lhs != model.rhs)
    return np.flatnonzero(bad)


def first_violation(model: MilpModel, vec: np.ndarray) -> str | None:
    """Tag of the first violated row (rows are ordered by tag), or None when feasible."""
    if vec.shape != (model.n_vars,):
        return "shape"
    if np.any((vec != 0) & (vec != 1)):
        return "binary"
    bad = violated_rows(model, vec)
    return str(model.tags[bad[0]]) if bad.size else None


def objective_value(model: MilpModel, vec: np.ndarray) -> float:
    return float(model.objective @ vec)


# -- schedules ---------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Track:
    resource_ids: tuple[str, ...]
    track: tuple[int, int]
    setup: tuple[int, int]
    teardown: tuple[int, int]
    activity_id: str
    parent_id: str
    mission_id: str
    view_period_id: str

    @property
    def span(self) -> tuple[int, int]:
        return self.setup[0], self.teardown[1]

    @property
    def tracked_slots(self) -> int:
        return self.track[1] - self.track[0]

    def to_dict(self) -> dict:
        return {
            "activity_id": self.activity_id,
            "parent_id": self.parent_id,
            "mission_id": self.mission_id,
            "view_period_id": self.view_period_id,
            "resource_ids": list(self.resource_ids),
            "setup": list(self.setup),
            "track": list(self.track),
            "teardown": list(self.teardown),
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Track":
        return cls(
            resource_ids=tuple(doc["resource_ids"]),
            track=tuple(doc["track"]),
            setup=tuple(doc["setup"]),
            teardown=tuple(doc["teardown"]),
            activity_id=doc["activity_id"],
            parent_id=doc.get("parent_id", doc["activity_id"]),
            mission_id=doc["mission_id"],
            view_period_id=doc["view_period_id"],
        )


@dataclass(frozen=True)
class Schedule:
    tracks: tuple[Track, ...] = ()
    completed: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(sorted(self.tracks)))
        object.__setattr__(self, "completed", frozenset(self.completed))

    def __len__(self) -> int:
        return len(self.tracks)


def _runs(slots: list[int]) -> list[tuple[int, int]]:
    out = []
    for t in sorted(slots):
        if out and out[-1][1] == t:
            out[-1][1] = t + 1
        else:
            out.append([t, t + 1])
    return [tuple(r) for r in out]


def make_track(instance: ProblemInstance, vp_id: str, start: int, end: int) -> Track:
    a = instance.activity_by_id[instance.activity_of_view_period[vp_id]]
    return Track(
        resource_ids=instance.view_period_by_id[vp_id].resource_ids,
        track=(start, end),
        setup=(start - a.setup, start),
        teardown=(end, end + a.teardown),
        activity_id=a.id,
        parent_id=a.root_id,
        mission_id=a.mission_id,
        view_period_id=vp_id,
    )


def extract_schedule(model: MilpModel, values: Mapping[str, float] | np.ndarray) -> Schedule:
    """Decode an assignment into tracks after checking it against every row."""
    if model.instance is None:
        raise DecodeError("model carries no instance to decode against")
    vec = values if isinstance(values, np.ndarray) else assignment_vector(model, values)
    tag = first_violation(model, vec)
    if tag is not None:
        raise DecodeError(f"assignment violates constraint {tag}", tag=tag)

    on_slots: dict[int, list[int]] = {}
    completed = set()
    for key, idx in model.variables.index.items():
        if not vec[idx]:
            continue
        if key[0] == "x":
            completed.add(key[1])
        elif key[0] == "X":
            on_slots.setdefault(key[1], []).append(key[2])
        elif key[0] == "Xu":
            down = model.variables.get(("Xd", key[1], key[2]))
            if down is not None and vec[down]:
                raise DecodeError(f"{model.variables.names[idx]} and its end flag are both set", tag="2c")

    tracks = [
        make_track(model.instance, model.view_period_ids[j], s, e)
        for j, slots in on_slots.items()
        for s, e in _runs(slots)
    ]
    return Schedule(tuple(tracks), frozenset(completed))


def encode_schedule(model: MilpModel, schedule: Schedule) -> np.ndarray:
    """Inverse of :func:`extract_schedule`: set every variable the tracks imply.

    Entries can exceed 1 when setups or teardowns of one view period collide,
    and the result is not checked; feed it to :func:`first_violation`.
    """
    vec = np.zeros(model.n_vars, dtype=np.int64)
    H = model.instance.grid.horizon_slots

    def bump(family, j, t):
        idx = model.variables.get((family, j, t))
        if idx is None:
            raise DecodeError(f"track needs {family}[{model.view_period_ids[j]}, {t}], which the model fixes to zero", tag="2b")
        vec[idx] += 1

    ordinal = model._vp_ordinal
    for tr in schedule.tracks:
        j = ordinal[tr.view_period_id]
        s, e = tr.track
        for t in range(s, e):
            bump("X", j, t)
        bump("Xu", j, s)
        if e < H:
            bump("Xd", j, e)
        for t in range(*tr.setup):
            bump("Yu", j, t)
        for t in range(*tr.teardown):
            bump("Yd", j, t)
    for aid in schedule.completed:
        idx = model.x(aid)
        if idx is None:
            raise DecodeError(f"unknown activity {aid}")
        vec[idx] += 1
    return vec


def schedule_to_values(model: MilpModel, schedule: Schedule) -> dict[str, int]:
    vec = encode_schedule(model, schedule)
    return {n: int(v) for n, v in zip(model.variables.names, vec)}
