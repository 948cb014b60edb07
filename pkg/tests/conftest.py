"""Shared builders: tiny hand-made weeks and a seeded corpus of them."""

from __future__ import annotations

import random
from dataclasses import dataclass

import pytest

from dsn_scheduler.core import Activity, Mission, ProblemInstance, Resource, TimeGrid, ViewPeriod
from dsn_scheduler.solve.oracle import count_free_bits
from dsn_scheduler.splitter import SplitRegistry, SplitTriple


def micro(activities, windows, resources=("R1",), horizon=48, maintenance=None, label="micro"):
    """Build an instance from compact specs.

    ``activities``: (id, mission, d_min, d_max, setup, teardown[, min_up, min_down])
    ``windows``: activity id -> list of (resource ids, [(start, end), ...]), one view period each
    """
    maintenance = maintenance or {}
    acts, vps = [], []
    for spec in activities:
        aid, mission, d_min, d_max, setup, teardown, *gammas = spec
        ids = []
        for k, (res, wins) in enumerate(windows[aid]):
            vid = f"{aid}/v{k}"
            vps.append(ViewPeriod(vid, tuple(res), tuple(tuple(w) for w in wins)))
            ids.append(vid)
        min_up = gammas[0] if len(gammas) > 0 else None
        min_down = gammas[1] if len(gammas) > 1 else None
        acts.append(Activity(aid, mission, d_min, d_max, setup, teardown, tuple(ids), min_up, min_down))
    missions = {}
    for a in acts:
        missions.setdefault(a.mission_id, []).append(a.id)
    return ProblemInstance(
        grid=TimeGrid(15, horizon),
        missions=tuple(Mission(m, tuple(ids)) for m, ids in missions.items()),
        activities=tuple(acts),
        resources=tuple(Resource(r, maintenance=tuple(maintenance.get(r, ()))) for r in resources),
        view_periods=tuple(vps),
        label=label,
    )


def with_clones(instance: ProblemInstance, parent: str, clone_d: tuple[int, int]):
    """Attach two hand-sized clones of ``parent`` (copies of its view periods) and the registry tying them."""
    from dataclasses import replace

    p = instance.activity_by_id[parent]
    vps = list(instance.view_periods)
    acts = list(instance.activities)
    ids = []
    for suffix in ("'", "''"):
        copies = [replace(instance.view_period_by_id[v], id=v + suffix) for v in p.view_period_ids]
        vps.extend(copies)
        cid = parent + suffix
        acts.append(replace(p, id=cid, d_min=clone_d[0], d_max=clone_d[1], min_up=None,
                            view_period_ids=tuple(c.id for c in copies), parent_id=parent, split_eligible=False))
        ids.append(cid)
    missions = tuple(Mission(m.id, m.activity_ids + (tuple(ids) if m.id == p.mission_id else ())) for m in instance.missions)
    expanded = replace(instance, missions=missions, activities=tuple(acts), view_periods=tuple(vps))
    return expanded, SplitRegistry((SplitTriple(parent, *ids),))


@dataclass(frozen=True)
class Case:
    name: str
    instance: ProblemInstance
    registry: SplitRegistry


def micro_corpus(n: int = 24, seed: int = 7, max_bits: int = 18) -> list[Case]:
    """Seeded random tiny weeks, each under ``max_bits`` free binaries.

    One in four carries a hand-made split triple so the exclusive-or rows are
    exercised too.
    """
    rng = random.Random(seed)
    cases: list[Case] = []
    attempt = 0
    while len(cases) < n:
        attempt += 1
        n_res = rng.choice((1, 2))
        resources = tuple(f"R{i + 1}" for i in range(n_res))
        horizon = rng.choice((12, 16, 24, 32, 48))
        n_act = rng.choice((1, 2, 3))
        split = len(cases) % 4 == 3
        if split:
            n_act = min(n_act, 2)
        specs, windows = [], {}
        for i in range(n_act):
            d_min = rng.randint(1, 3)
            d_max = d_min + rng.randint(0, 2)
            setup, teardown = rng.randint(0, 2), rng.randint(0, 1)
            aid = f"a{i}"
            mission = rng.choice(("M1", "M2")) if n_act > 1 else "M1"
            spec = [aid, mission, d_min, d_max, setup, teardown]
            if rng.random() < 0.3:
                spec += [rng.randint(1, d_min), rng.randint(0, 3)]
            specs.append(tuple(spec))
            length = rng.randint(d_min + 1, d_min + 4)
            start = rng.randint(0, max(0, horizon - length - 1))
            res = rng.sample(resources, rng.choice((1, n_res)) if n_res > 1 and rng.random() < 0.25 else 1)
            windows[aid] = [(tuple(sorted(res)), [(start, start + length)])]
        maint = {}
        if rng.random() < 0.3:
            s = rng.randint(0, horizon - 2)
            maint[rng.choice(resources)] = [(s, s + rng.randint(1, 2))]
        inst = micro(specs, windows, resources, horizon, maint, label=f"corpus-{len(cases):02d}")
        registry = SplitRegistry()
        if split:
            p = inst.activities[0]
            half = max(1, p.d_max // 2)
            inst, registry = with_clones(inst, p.id, (min(half, p.d_min), half))
        if count_free_bits(inst) > max_bits:
            continue
        cases.append(Case(inst.label, inst, registry))
    return cases


@pytest.fixture(scope="session")
def corpus() -> list[Case]:
    return micro_corpus()


@pytest.fixture
def single():
    """One 2-slot request with one-slot setup and teardown, window [0, 8)."""
    return micro([("A", "M", 2, 2, 1, 1)], {"A": [(("R1",), [(0, 8)])]}, horizon=8)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
