"""Scikit-learn style wrapper around the full pipeline.

The "data" is a problem instance rather than a feature matrix, so this
follows the estimator conventions (constructor stores parameters verbatim,
``fit`` returns self, learned state ends in an underscore) without claiming
compatibility with sklearn's array validation or pipelines.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .balance import BalancerConfig, run_balancer
from .core import ProblemInstance
from .evaluate import compute_metrics, validate_schedule
from .ingest import instance_hash
from .milp import ModelConfig, Schedule, parse_ablation
from .solve import ExternalSolver, OracleSolver
from .splitter import expand_splits


def check_instance(instance) -> ProblemInstance:
    if not isinstance(instance, ProblemInstance):
        raise TypeError(f"expected a ProblemInstance, got {type(instance).__name__}")
    return instance


class BalancedScheduler(BaseEstimator):
    """Fit = run the re-weighting loop on one week; predict = the chosen schedule."""

    def __init__(
        self,
        solver="highs",
        time_limit=1800.0,
        k_max=10,
        eta0=0.15,
        incr_threshold=0.05,
        prioritize=(),
        priority_weight=5.0,
        max_solves=50,
        single_interval=False,
        ablate=None,
    ):
        self.solver = solver
        self.time_limit = time_limit
        self.k_max = k_max
        self.eta0 = eta0
        self.incr_threshold = incr_threshold
        self.prioritize = prioritize
        self.priority_weight = priority_weight
        self.max_solves = max_solves
        self.single_interval = single_interval
        self.ablate = ablate

    def _backend(self):
        if callable(self.solver):
            return self.solver
        if self.solver == "oracle":
            return OracleSolver()
        if self.solver == "highs":
            return ExternalSolver()
        return ExternalSolver(command=self.solver)

    def fit(self, X, y=None):
        instance = check_instance(X)
        config = BalancerConfig(
            eta0=self.eta0,
            incr_threshold=self.incr_threshold,
            k_max=self.k_max,
            k_time=self.time_limit,
            priority_multiplier=self.priority_weight,
            prioritized_missions=frozenset(self.prioritize or ()),
            max_solves=self.max_solves,
        )
        model_config = ModelConfig(single_interval=self.single_interval, ablate=parse_ablation(self.ablate))
        self.expanded_, self.registry_ = expand_splits(instance)
        self.result_ = run_balancer(self.expanded_, self.registry_, config, self._backend(), model_config)
        self.schedule_ = self.result_.chosen.schedule
        self.metrics_ = self.result_.chosen.metrics
        self.instance_hash_ = instance_hash(instance)
        return self

    def _check_fitted(self):
        if not hasattr(self, "schedule_"):
            raise NotFittedError("call fit before predict")

    def predict(self, X=None) -> Schedule:
        self._check_fitted()
        if X is not None and instance_hash(check_instance(X)) != self.instance_hash_:
            raise ValueError("predict was given a different instance than fit")
        return self.schedule_

    def score(self, X=None, y=None) -> float:
        """Negative distance of the chosen schedule, so larger is better."""
        self._check_fitted()
        return -self.metrics_.d

    def validate(self, strict: bool = False):
        self._check_fitted()
        return validate_schedule(self.expanded_, self.registry_, self.schedule_, strict)

    def metrics(self, prioritized=()):
        self._check_fitted()
        return compute_metrics(self.expanded_, self.registry_, self.schedule_, prioritized or self.prioritize or ())
