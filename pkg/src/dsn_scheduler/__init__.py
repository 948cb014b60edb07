"""Weekly deep-space antenna scheduling as a time-indexed 0/1 program.

Typical use::

    from dsn_scheduler import desk_instance, expand_splits, run_balancer, BalancerConfig, ExternalSolver

    expanded, registry = expand_splits(desk_instance(seed=0))
    result = run_balancer(expanded, registry, BalancerConfig(k_time=60), ExternalSolver())
"""

from .balance import BalancerConfig, BalancerResult, run_balancer, select_best, update_weights
from .core import Activity, Mission, ProblemInstance, Resource, TimeGrid, ViewPeriod
from .estimator import BalancedScheduler
from .evaluate import MetricsReport, ValidationReport, compute_metrics, validate_schedule
from .ingest import desk_instance, generate_synthetic, load_instance, summarize, w44_2016_instance
from .milp import ModelConfig, Schedule, Track, Weights, build_model, extract_schedule
from .solve import ExternalSolver, OracleSolver, export_mps, solve_exact_oracle, solve_external
from .splitter import SplitRegistry, expand_splits

__version__ = "0.1.0"

__all__ = [
    "Activity",
    "BalancedScheduler",
    "BalancerConfig",
    "BalancerResult",
    "ExternalSolver",
    "MetricsReport",
    "Mission",
    "ModelConfig",
    "OracleSolver",
    "ProblemInstance",
    "Resource",
    "Schedule",
    "SplitRegistry",
    "TimeGrid",
    "Track",
    "ValidationReport",
    "ViewPeriod",
    "Weights",
    "build_model",
    "compute_metrics",
    "desk_instance",
    "expand_splits",
    "export_mps",
    "extract_schedule",
    "generate_synthetic",
    "load_instance",
    "run_balancer",
    "select_best",
    "solve_exact_oracle",
    "solve_external",
    "summarize",
    "update_weights",
    "validate_schedule",
    "w44_2016_instance",
]
