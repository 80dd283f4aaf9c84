"""Estimator-style front end to the synthesis pipeline."""

from __future__ import annotations

import json
from pathlib import Path

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .circuit import Circuit
from .domains import OBJECTIVES, ConstraintSet
from .model import Model, load_model, model_from_dict, parse_model
from .solver import STRATEGIES, Budget
from .synthesis import synthesize


def as_model(model) -> Model:
    """Accept a ``Model``, a JSON document (dict), JSON text or a path to a model file."""
    if isinstance(model, Model):
        return model
    if isinstance(model, dict):
        return model_from_dict(model)
    if isinstance(model, Path):
        return load_model(model)
    if isinstance(model, str):
        if model.lstrip().startswith("{"):
            return parse_model(model)
        return load_model(model)
    raise TypeError(f"cannot interpret {type(model).__name__} as a model")


class QuantumSynthesizer(BaseEstimator):
    """Synthesize a gate-level circuit from a functional model.

    Parameters
    ----------
    max_width, max_depth, max_cx : int, optional
        Hard resource constraints; ``None`` leaves the resource free.
    objective : {"none", "width", "depth", "cx", "single"}
        Resource to minimize by branch and bound.
    strategies : list of str, optional
        Warm-start strategies to try before the full search.  Chosen from the
        constraints and objective when omitted.
    seed : int
        Seed for the randomized strategy; the search is otherwise deterministic.
    timeout : float
        Wall-clock budget in seconds.
    reducer : bool
        Whether to add symmetry-breaking edges before searching.

    Attributes
    ----------
    model_ : Model
    graph_ : CallGraph
    solution_ : Solution
    circuit_ : Circuit
    metrics_ : Metrics
    optimal_ : bool
        Whether the search proved the objective value optimal.

    Examples
    --------
    >>> from qsynth.benchmarks import build_walk_model
    >>> est = QuantumSynthesizer(max_width=8, objective="cx").fit(build_walk_model(3))
    >>> est.transform().num_qubits <= 8
    True
    """

    def __init__(self, max_width=None, max_depth=None, max_cx=None, objective="none",
                 strategies=None, seed=0, timeout=1000.0, reducer=True):
        self.max_width = max_width
        self.max_depth = max_depth
        self.max_cx = max_cx
        self.objective = objective
        self.strategies = strategies
        self.seed = seed
        self.timeout = timeout
        self.reducer = reducer

    def _constraints(self) -> ConstraintSet:
        return ConstraintSet.make(max_width=self.max_width, max_depth=self.max_depth, max_cx=self.max_cx)

    def fit(self, model, y=None):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.strategies is not None:
            unknown = set(self.strategies) - set(STRATEGIES)
            if unknown:
                raise ValueError(f"unknown strategies {sorted(unknown)}")
        self.model_ = as_model(model)
        result = synthesize(self.model_, self._constraints(), self.objective, self.strategies,
                            Budget(self.timeout), self.seed, reducer=self.reducer)
        self.graph_ = result.graph
        self.solution_ = result.solution
        self.circuit_ = result.circuit
        self.metrics_ = result.solution.metrics
        self.optimal_ = result.solution.optimal
        self.elapsed_ = result.elapsed
        return self

    def transform(self, X=None) -> Circuit:
        """Return the synthesized circuit (``X`` is ignored)."""
        check_is_fitted(self, "circuit_")
        return self.circuit_

    def fit_transform(self, model, y=None) -> Circuit:
        return self.fit(model).transform()

    def report(self) -> dict:
        check_is_fitted(self, "solution_")
        return self.solution_.report()

    def report_json(self) -> str:
        return json.dumps(self.report(), indent=2, sort_keys=True) + "\n"
