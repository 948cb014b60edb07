"""Drive an external MILP solver through files.

The backend is any command template with ``{mps}``, ``{sol}`` and
``{time_limit_s}`` placeholders. It must read the MPS file and write a
solution file of ``name value`` lines, plus an ``=obj= <value>`` line and
optionally ``=status= <optimal|feasible_time_limit|infeasible|error>``.
Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import logging
import math
import os
import shlex
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

from ..exceptions import DecodeError, ParseError
from ..milp import MilpModel, assignment_vector, first_violation, objective_value
from .base import Assignment, Status
from .mps import export_mps

log = logging.getLogger(__name__)

COMMAND_ENV = "DSN_SOLVER_COMMAND"
ROUND_TOL = 1e-6


def default_command() -> str:
    """Template from the environment, else the bundled HiGHS driver."""
    env = os.environ.get(COMMAND_ENV)
    if env:
        return env
    return f"{shlex.quote(sys.executable)} -m dsn_scheduler.solve.highs_driver {{mps}} {{sol}} {{time_limit_s}}"


@dataclass(frozen=True)
class SolutionFile:
    values: dict[str, float]
    objective: float | None
    status: Status | None


def parse_solution(text: str) -> SolutionFile:
    values: dict[str, float] = {}
    objective = None
    status = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'name value', got {line!r}", path=f"line {lineno}")
        name, value = parts
        if name == "=status=":
            try:
                status = Status(value)
            except ValueError:
                raise ParseError(f"unknown status {value!r}", path=f"line {lineno}") from None
            continue
        try:
            number = float(value)
        except ValueError:
            raise ParseError(f"value {value!r} is not a number", path=f"line {lineno}") from None
        if not math.isfinite(number):
            raise ParseError(f"value {value!r} is not finite", path=f"line {lineno}")
        if name == "=obj=":
            objective = number
        else:
            values[name] = number
    return SolutionFile(values, objective, status)


def _rounded(values: dict[str, float]) -> dict[str, int]:
    out = {}
    for name, v in values.items():
        r = round(v)
        if abs(v - r) > ROUND_TOL or r not in (0, 1):
            raise DecodeError(f"{name} = {v!r} is not binary within {ROUND_TOL}", tag="binary")
        out[name] = int(r)
    return out


def solve_external(model: MilpModel, solver_command: str | None = None, time_limit: float = 1800.0) -> Assignment:
    """Export, run the backend in a private directory, parse, round and verify.

    Never returns an assignment that breaks a model row: any violation after
    rounding becomes an error status.
    """
    template = solver_command or default_command()
    started = time.monotonic()

    def fail(status: Status, message: str) -> Assignment:
        return Assignment(status=status, message=message, wall_seconds=time.monotonic() - started)

    with tempfile.TemporaryDirectory(prefix="dsn-solve-") as tmp:
        mps_path = Path(tmp) / "model.mps"
        sol_path = Path(tmp) / "model.sol"
        mps_path.write_bytes(export_mps(model))
        try:
            argv = [a.format(mps=mps_path, sol=sol_path, time_limit_s=int(math.ceil(time_limit)))
                    for a in shlex.split(template)]
        except (KeyError, IndexError, ValueError) as exc:
            return fail(Status.ERROR, f"bad solver command template {template!r}: {exc}")
        log.info("running %s", " ".join(argv))
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, cwd=tmp, timeout=2 * time_limit + 60)
        except FileNotFoundError as exc:
            return fail(Status.ERROR, f"solver executable not found: {exc}")
        except subprocess.TimeoutExpired:
            return fail(Status.ERROR, f"solver did not exit within {2 * time_limit + 60:.0f} s")
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip()[-2000:]
            return fail(Status.ERROR, f"solver exited with code {proc.returncode}: {tail}")
        if not sol_path.exists():
            return fail(Status.ERROR, "solver wrote no solution file")
        try:
            parsed = parse_solution(sol_path.read_text())
        except ParseError as exc:
            return fail(Status.ERROR, f"unparseable solution: {exc}")

    status = parsed.status or Status.OPTIMAL
    if status in (Status.INFEASIBLE, Status.ERROR):
        return fail(status, f"backend reported {status.value}")
    if not parsed.values and model.n_vars:
        return fail(Status.ERROR, "solution file lists no variables")
    try:
        values = _rounded(parsed.values)
        vec = assignment_vector(model, values)
    except DecodeError as exc:
        return fail(Status.ERROR, str(exc))
    missing = model.n_vars - sum(1 for n in model.variables.names if n in values)
    if missing:
        return fail(Status.ERROR, f"solution omits {missing} model variables")
    tag = first_violation(model, vec)
    if tag is not None:
        return fail(Status.ERROR, f"rounded solution violates constraint {tag}")

    objective = objective_value(model, vec)
    message = ""
    if parsed.objective is not None and abs(parsed.objective - objective) > ROUND_TOL * max(1.0, abs(objective)):
        message = f"backend objective {parsed.objective} differs from recomputed {objective}"
        log.warning(message)
    return Assignment(
        values={n: int(v) for n, v in zip(model.variables.names, vec)},
        objective=objective,
        status=status,
        message=message,
        wall_seconds=time.monotonic() - started,
    )


@dataclass
class ExternalSolver:
    """Callable adapter so the balancer can take any backend template."""

    command: str | None = None
    name: str = "external"

    def __call__(self, model: MilpModel, time_limit: float) -> Assignment:
        return solve_external(model, self.command, time_limit)
