from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Protocol

from ..milp import MilpModel


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE_TIME_LIMIT = "feasible_time_limit"
    INFEASIBLE = "infeasible"
    ERROR = "error"

    @property
    def has_solution(self) -> bool:
        return self in (Status.OPTIMAL, Status.FEASIBLE_TIME_LIMIT)


@dataclass(frozen=True)
class Assignment:
    """Solver output keyed by variable name; ``objective`` is recomputed locally."""

    values: Mapping[str, int] = field(default_factory=dict)
    objective: float = 0.0
    status: Status = Status.ERROR
    message: str = ""
    wall_seconds: float = 0.0


class Solver(Protocol):
    name: str

    def __call__(self, model: MilpModel, time_limit: float) -> Assignment: ...
