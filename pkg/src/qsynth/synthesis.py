"""End-to-end pipeline: model -> call graph -> search -> circuit."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .callgraph import CallGraph, lower_to_graph, reduce_graph
from .circuit import Circuit, Metrics
from .domains import ConstraintSet
from .emitter import check_metrics, emit
from .model import Model
from .solver import Budget, Solution, solve


@dataclass
class SynthesisResult:
    solution: Solution
    circuit: Circuit
    graph: CallGraph
    elapsed: float

    @property
    def metrics(self) -> Metrics:
        return self.solution.metrics


def synthesize(model: Model, constraints: ConstraintSet | None = None, objective: str = "none",
               strategies=None, budget: Budget | None = None, seed: int = 0, reducer: bool = True,
               trace=None) -> SynthesisResult:
    """Synthesize ``model``; raises the solver's ``Infeasible``/``SearchTimeout``."""
    t0 = time.perf_counter()
    graph = lower_to_graph(model)
    if reducer:
        graph = reduce_graph(graph)
    solution = solve(graph, constraints or ConstraintSet(), objective, strategies, budget, seed, trace)
    circuit = emit(solution)
    check_metrics(solution, circuit)
    return SynthesisResult(solution, circuit, graph, time.perf_counter() - t0)
