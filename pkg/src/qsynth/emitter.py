"""Materialize a solution as a flat circuit over physical qubits.

Functional qubits take indices ``0..F-1`` in declaration order of the entry
variables; scratch qubit ``j`` of the solution becomes ``F + j``.  Each node's
fragment is wrapped in barriers over all of its qubits, so as-soon-as-possible
layering of the emitted circuit reproduces the solver's block schedule and
the measured depth equals the solution's depth exactly.
"""

from __future__ import annotations

from .circuit import Circuit, Gate, Metrics, measure, parse_qasm, to_qasm
from .solver import Solution

__all__ = ["emit", "measure", "to_qasm", "parse_qasm", "EmitError", "qubit_map"]


class EmitError(RuntimeError):
    """The solution does not fit the graph it claims to solve (a solver bug)."""


def qubit_map(solution: Solution) -> dict:
    """Physical index for every functional and scratch-register bit reference."""
    g = solution.graph
    F = g.num_functional
    mapping = {q: i for i, q in enumerate(g.functional)}
    for n in solution.order:
        node = g.nodes[n]
        if node.kind == "alloc":
            for ref, q in zip(node.qubits, solution.scratch[n]):
                mapping[ref] = F + q
    return mapping


def _barrier(circuit: Circuit, qubits) -> None:
    qs = tuple(dict.fromkeys(qubits))
    if len(qs) > 1:
        circuit.gates.append(Gate("barrier", qs))


def emit(solution: Solution) -> Circuit:
    g = solution.graph
    F = g.num_functional
    circuit = Circuit(solution.metrics.width)
    mapping = qubit_map(solution)
    for n in solution.order:
        node = g.nodes[n]
        if node.kind == "composite":
            raise EmitError(f"node {n} is an unexpanded composite")
        if node.kind in ("alloc", "free"):
            _barrier(circuit, [mapping[q] for q in node.qubits])
            continue
        row = solution.rows[n]
        try:
            variant = node.variant(row.variant)
        except KeyError as exc:
            raise EmitError(str(exc)) from None
        op = node.op
        ctrl = [mapping[q] for q in op.ctrl]
        args = [[mapping[q] for q in a] for a in op.args]
        aux = [F + q for q in solution.scratch.get(n, ())]
        if len(aux) != variant.aux_count:
            raise EmitError(f"node {n} got {len(aux)} scratch qubits, variant needs {variant.aux_count}")
        everything = ctrl + [q for a in args for q in a] + aux
        _barrier(circuit, everything)
        circuit.extend(variant.generate(ctrl, args, aux, inverted=op.inverted))
        _barrier(circuit, everything)
    circuit.validate()
    return circuit


def check_metrics(solution: Solution, circuit: Circuit) -> Metrics:
    measured = measure(circuit)
    if measured != solution.metrics:
        raise EmitError(f"measured {measured.as_dict()} != solver {solution.metrics.as_dict()}")
    return measured
