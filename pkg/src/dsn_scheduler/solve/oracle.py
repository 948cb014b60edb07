"""Exhaustive reference solver for tiny instances.

It shares no code with the model builder. The free bits are the completion
flag of every activity and every tracking cell a view period could ever
use; start, end, setup and teardown flags follow from the tracking cells by
definition. Every bit vector is enumerated in batches and checked with
dense array arithmetic, and the best one wins, with ties going to the
lexicographically smallest vector (completion flags first, then cells by
view period and slot).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..core import ProblemInstance
from ..exceptions import ModelError
from ..milp import MilpModel, ModelConfig, Weights
from ..splitter import SplitRegistry
from .base import Assignment, Status

DEFAULT_MAX_VARS = 24
_BATCH = 1 << 14
_UNSUPPORTED_ABLATIONS = frozenset({"2c", "2f", "2g"})


def _cells(instance: ProblemInstance) -> list[tuple[int, int]]:
    """(view period ordinal, slot) pairs where tracking is allowed."""
    H = instance.grid.horizon_slots
    owner = {vid: a for a in instance.activities for vid in a.view_period_ids}
    cells = []
    for j, vp in enumerate(instance.view_periods):
        a = owner[vp.id]
        blocked = set()
        for rid in vp.resource_ids:
            blocked |= instance.resource_by_id[rid].maintenance_slots
        for t in range(H):
            in_window = any(s <= t < e for s, e in vp.windows)
            if in_window and t not in blocked and t >= a.setup and t + a.teardown <= H - 1:
                cells.append((j, t))
    return cells


def count_free_bits(instance: ProblemInstance) -> int:
    return len(instance.activities) + len(_cells(instance))


def _bits(start: int, stop: int, n: int) -> np.ndarray:
    """Rows are the integers start..stop-1 as n bits, most significant first."""
    ints = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((ints[:, None] >> shifts) & 1).astype(np.int8)


@dataclass
class _Layout:
    instance: ProblemInstance
    cells: list[tuple[int, int]]
    n_act: int
    H: int
    nv: int

    @property
    def n(self) -> int:
        return self.n_act + len(self.cells)


def _derive(layout: _Layout, bits: np.ndarray):
    """Dense X, start, end, setup count and teardown count per (batch, vp, t)."""
    B = bits.shape[0]
    H, nv = layout.H, layout.nv
    X = np.zeros((B, nv, H), dtype=np.int8)
    for k, (j, t) in enumerate(layout.cells):
        X[:, j, t] = bits[:, layout.n_act + k]
    prev = np.zeros_like(X)
    prev[:, :, 1:] = X[:, :, :-1]
    up = ((X == 1) & (prev == 0)).astype(np.int8)
    down = ((X == 0) & (prev == 1)).astype(np.int8)
    setup_cnt = np.zeros((B, nv, H), dtype=np.int8)
    tear_cnt = np.zeros((B, nv, H), dtype=np.int8)
    acts = layout.instance.activities
    owner = {vid: a for a in acts for vid in a.view_period_ids}
    for j, vp in enumerate(layout.instance.view_periods):
        a = owner[vp.id]
        for k in range(1, a.setup + 1):
            setup_cnt[:, j, : H - k] += up[:, j, k:]
        for k in range(a.teardown):
            tear_cnt[:, j, k:] += down[:, j, : H - k]
    return X, up, down, setup_cnt, tear_cnt


def _feasible(layout: _Layout, bits: np.ndarray, registry: SplitRegistry, config: ModelConfig) -> np.ndarray:
    inst = layout.instance
    H = layout.H
    skip = config.ablate
    X, up, down, su, td = _derive(layout, bits)
    ok = np.ones(bits.shape[0], dtype=bool)

    # setup/teardown flags are binary, so overlapping windows of one view period are out
    ok &= (su <= 1).all(axis=(1, 2)) & (td <= 1).all(axis=(1, 2))

    vp_index = {v.id: j for j, v in enumerate(inst.view_periods)}
    act_index = {a.id: i for i, a in enumerate(inst.activities)}
    for a in inst.activities:
        js = [vp_index[v] for v in a.view_period_ids]
        g_up, g_down = max(a.gamma_up, 1), max(a.gamma_down, 1)
        for j in js:
            if "2d" not in skip:
                # every on-run is at least g_up long unless the horizon cuts it
                for t in range(H):
                    lo = max(0, t - g_up + 1)
                    ok &= up[:, j, lo : t + 1].sum(axis=1) <= X[:, j, t]
            if "2e" not in skip:
                for t in range(H):
                    lo = max(0, t - g_down + 1)
                    ok &= down[:, j, lo : t + 1].sum(axis=1) + X[:, j, t] <= 1
            if config.single_interval and "single" not in skip:
                ok &= up[:, j, :].sum(axis=1) <= 1
        if "2i" not in skip:
            tracked = X[:, js, :].sum(axis=(1, 2)) if js else np.zeros(bits.shape[0], dtype=np.int64)
            x = bits[:, act_index[a.id]].astype(np.int64)
            ok &= (a.d_min * x <= tracked) & (tracked <= a.d_max * x)

    occupancy = X + su + td
    if "2h" not in skip:
        for r in inst.resources:
            js = [j for j, v in enumerate(inst.view_periods) if r.id in v.resource_ids]
            if js:
                ok &= (occupancy[:, js, :].sum(axis=1) <= 1).all(axis=1)
    if "2j" not in skip:
        for m in inst.missions:
            js = [vp_index[v] for a in inst.activities if a.mission_id == m.id for v in a.view_period_ids]
            if js:
                ok &= (occupancy[:, js, :].sum(axis=1) <= 1).all(axis=1)

    for parent, first, second in registry.triples:
        x, x1, x2 = (bits[:, act_index[i]] for i in (parent, first, second))
        if "2k" not in skip:
            ok &= x1 <= x2
        if "2l" not in skip:
            ok &= x2 <= x1
        if "2m" not in skip:
            ok &= x + x1 <= 1
    return ok


def _names(layout: _Layout, bits: np.ndarray) -> dict[str, int]:
    """Name-keyed nonzero values for one bit vector, derived flags included."""
    X, up, down, su, td = (arr[0] for arr in _derive(layout, bits[None, :]))
    out = {f"x_a{i}": 1 for i in range(layout.n_act) if bits[i]}
    for fam, arr in (("X", X), ("Xu", up), ("Xd", down), ("Yu", su), ("Yd", td)):
        for j, t in zip(*np.nonzero(arr)):
            out[f"{fam}_v{j}_t{t}"] = 1
    return out


def solve_exact_oracle(
    expanded: ProblemInstance,
    registry: SplitRegistry | None = None,
    weights: Weights | None = None,
    max_vars: int = DEFAULT_MAX_VARS,
    config: ModelConfig | None = None,
) -> Assignment:
    started = time.monotonic()
    registry = registry or SplitRegistry()
    config = config or ModelConfig()
    weights = weights or Weights.uniform(expanded)
    if config.ablate & _UNSUPPORTED_ABLATIONS:
        raise ModelError(f"the oracle cannot drop defining constraints {sorted(config.ablate & _UNSUPPORTED_ABLATIONS)}")

    layout = _Layout(expanded, _cells(expanded), len(expanded.activities), expanded.grid.horizon_slots,
                     len(expanded.view_periods))
    n = layout.n
    if n > max_vars:
        raise ModelError(f"{n} free binaries exceed the oracle limit of {max_vars}")

    c = np.array(
        [weights.c1.get(a.id, 0.0) for a in expanded.activities]
        + [weights.c2.get(expanded.view_periods[j].id, 0.0) for j, _ in layout.cells]
    )
    best_val, best_bits = -np.inf, None
    total = 1 << n
    for start in range(0, total, _BATCH):
        bits = _bits(start, min(start + _BATCH, total), n)
        ok = _feasible(layout, bits, registry, config)
        if not ok.any():
            continue
        vals = np.where(ok, bits @ c, -np.inf)
        i = int(np.argmax(vals))  # first maximum is the smallest integer, i.e. lexicographically smallest
        if vals[i] > best_val:
            best_val, best_bits = float(vals[i]), bits[i].copy()

    elapsed = time.monotonic() - started
    if best_bits is None:
        return Assignment(status=Status.INFEASIBLE, message="no feasible vector", wall_seconds=elapsed)
    return Assignment(values=_names(layout, best_bits), objective=best_val + 0.0, status=Status.OPTIMAL,
                      message=f"enumerated {total} vectors", wall_seconds=elapsed)


def weights_from_model(model: MilpModel) -> Weights:
    """Read c1/c2 back off a built model's objective."""
    inst = model.instance
    c1 = {a: 0.0 for a in model.activity_ids}
    c2 = {v: 0.0 for v in model.view_period_ids}
    for key, idx in model.variables.index.items():
        if key[0] == "x":
            c1[key[1]] = float(model.objective[idx])
        elif key[0] == "X":
            c2[model.view_period_ids[key[1]]] = float(model.objective[idx])
    if inst is None:
        raise ModelError("model carries no instance")
    return Weights(c1, c2)


@dataclass
class OracleSolver:
    max_vars: int = DEFAULT_MAX_VARS
    name: str = "oracle"

    def __call__(self, model: MilpModel, time_limit: float) -> Assignment:
        if model.instance is None:
            raise ModelError("the oracle needs a model built from an instance")
        return solve_exact_oracle(model.instance, model.registry, weights_from_model(model), self.max_vars, model.config)


__all__ = ["OracleSolver", "count_free_bits", "solve_exact_oracle", "weights_from_model"]
