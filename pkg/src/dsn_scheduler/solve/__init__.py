"""Solver backends: MPS exchange with an external process, and an exhaustive oracle."""

from .base import Assignment, Status
from .external import ExternalSolver, default_command, parse_solution, solve_external
from .mps import export_mps, read_mps
from .oracle import OracleSolver, solve_exact_oracle

__all__ = [
    "Assignment",
    "ExternalSolver",
    "OracleSolver",
    "Status",
    "default_command",
    "export_mps",
    "parse_solution",
    "read_mps",
    "solve_exact_oracle",
    "solve_external",
]
