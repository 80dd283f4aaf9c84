"""The two experiment families (quantum walk, QSVT), sweeps and the fixed baseline.

Walk step on a circle of ``2**N`` nodes::

    H(coin); control(coin == 0) { increment(x) }; control(coin == 1) { invert { increment(x) } }

``increment`` is the MCX cascade: for ``i`` in ``0..N-2`` flip ``x[N-1-i]``
controlled on ``x[0:N-1-i]`` being all ones, then ``X(x[0])``.

QSVT on the block encoding of ``A = A1 A0`` (``A0`` a Toeplitz shift mix on
two block qubits, ``A1 = I - |0><0|`` as a linear combination of unitaries on
a third) with ``degree + 1`` projector-controlled phases::

    rot(p0) U rot(p1) U^-1 rot(p2) U ... rot(p_d)
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .callgraph import lower_to_graph, reduce_graph
from .domains import ConstraintSet
from .emitter import check_metrics, emit
from .model import Model, model_from_dict
from .solver import Budget, Infeasible, SearchTimeout, solve
from .synthesis import synthesize

CSV_FIELDS = ("family", "N", "max_width", "objective", "width", "depth", "cx", "gen_time_ms", "optimal", "timeout")


# -- models -----------------------------------------------------------------------

def walk_document(N: int) -> dict:
    if N < 1:
        raise ValueError("N must be >= 1")
    return {
        "entry": "main",
        "variables": {"coin": 1, "x": N},
        "functions": {
            "my_mcx": {
                "params": [{"name": "x", "kind": "qnum"}, {"name": "y", "kind": "qubit"}],
                "body": [{"control": "x", "equals": "2**x.size - 1", "body": [{"gate": "X", "qubits": ["y"]}]}],
            },
            "increment": {
                "params": [{"name": "x", "kind": "qubit-array"}],
                "body": [
                    {"repeat": "x.len - 1", "index": "i",
                     "body": [{"call": "my_mcx", "args": ["x[0:(x.len - 1) - i]", "x[(x.len - 1) - i]"]}]},
                    {"gate": "X", "qubits": ["x[0]"]},
                ],
            },
            "single_step": {
                "params": [{"name": "coin", "kind": "qubit"}, {"name": "x", "kind": "qnum"}],
                "body": [
                    {"gate": "H", "qubits": ["coin"]},
                    {"control": "coin", "equals": 0, "body": [{"call": "increment", "args": ["x"]}]},
                    {"control": "coin", "equals": 1,
                     "body": [{"invert": [{"call": "increment", "args": ["x"]}]}]},
                ],
            },
            "main": {"params": [], "body": [{"call": "single_step", "args": ["coin", "x"]}]},
        },
    }


def build_walk_model(N: int) -> Model:
    return model_from_dict(walk_document(N))


def qsvt_phases(degree: int, seed: int = 0) -> list[float]:
    rng = np.random.default_rng(seed)
    return [float(p) for p in rng.uniform(-math.pi, math.pi, size=degree + 1)]


def _block_encoding_functions() -> dict:
    packed = ["data", "block[1]"]
    return {
        "be_amat0": {
            "params": [{"name": "data", "kind": "qubit-array"}, {"name": "block", "kind": "qubit-array", "width": 2}],
            "body": [{
                "within": [{"call": "hadamard_transform", "args": ["block[0]"]}],
                "apply": [
                    {"control": "block[0]", "equals": 0, "body": [{"call": "add_const", "args": [packed, 2]}]},
                    {"call": "add_const", "args": [packed, -1]},
                ],
            }],
        },
        "be_projection": {
            "params": [{"name": "x", "kind": "qubit-array"}, {"name": "aux", "kind": "qubit"}],
            "body": [{
                "within": [{"gate": "H", "qubits": ["aux"]}],
                "apply": [{"control": "aux", "equals": 0, "body": [{"call": "reflect_about_zero", "args": ["x"]}]}],
            }],
        },
        "be_amat": {
            "params": [{"name": "data", "kind": "qubit-array"}, {"name": "block", "kind": "qubit-array", "width": 3}],
            "body": [
                {"call": "be_amat0", "args": ["data", "block[0:2]"]},
                {"call": "be_projection", "args": ["data", "block[2]"]},
            ],
        },
    }


def block_encoding_document(N: int) -> dict:
    functions = _block_encoding_functions()
    functions["main"] = {"params": [], "body": [{"call": "be_amat", "args": ["data", "block"]}]}
    return {"entry": "main", "variables": {"data": N, "block": 3}, "functions": functions}


def build_block_encoding_model(N: int) -> Model:
    return model_from_dict(block_encoding_document(N))


def qsvt_document(N: int, degree: int = 3, phases=None, seed: int = 0) -> dict:
    if degree < 1 or degree % 2 == 0:
        raise ValueError("degree must be odd and positive")
    phases = list(phases) if phases is not None else qsvt_phases(degree, seed)
    if len(phases) != degree + 1:
        raise ValueError(f"need {degree + 1} phases for degree {degree}, got {len(phases)}")
    functions = _block_encoding_functions()
    functions["projector_phase"] = {
        "params": [{"name": "phase", "kind": "real"}, {"name": "block", "kind": "qnum"},
                   {"name": "aux", "kind": "qubit"}],
        "body": [
            {"control": "block", "equals": 0, "body": [{"gate": "X", "qubits": ["aux"]}]},
            {"gate": "RZ", "qubits": ["aux"], "angle": "phase"},
            {"control": "block", "equals": 0, "body": [{"gate": "X", "qubits": ["aux"]}]},
        ],
    }
    body = [{"call": "projector_phase", "args": [phases[0], "block", "aux"]}]
    for j in range(1, degree + 1):
        apply = {"call": "be_amat", "args": ["data", "block"]}
        body.append(apply if j % 2 else {"invert": [apply]})
        body.append({"call": "projector_phase", "args": [phases[j], "block", "aux"]})
    functions["main"] = {"params": [], "body": body}
    return {"entry": "main", "variables": {"data": N, "block": 3, "aux": 1}, "functions": functions}


def build_qsvt_model(N: int, degree: int = 3, phases=None, seed: int = 0) -> Model:
    return model_from_dict(qsvt_document(N, degree, phases, seed))


# -- classical oracles --------------------------------------------------------------

def walk_step_matrix(N: int) -> np.ndarray:
    """Coin-conditioned shift after a coin Hadamard; coin is bit 0, position bits 1..N."""
    dim = 1 << (N + 1)
    M = 1 << N
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    shift = np.zeros((dim, dim))
    for x in range(M):
        shift[((x + 1) % M) << 1, x << 1] = 1
        shift[(((x - 1) % M) << 1) | 1, (x << 1) | 1] = 1
    coin = np.kron(np.eye(M), H)
    return shift @ coin


def a_matrix(N: int) -> np.ndarray:
    """``A = A1 A0``: ``A0`` is 0.5 on both off-diagonals, ``A1 = I - |0><0|`` zeroes row 0."""
    M = 1 << N
    A0 = np.zeros((M, M))
    for i in range(M - 1):
        A0[i, i + 1] = A0[i + 1, i] = 0.5
    A1 = np.eye(M)
    A1[0, 0] = 0.0
    return A1 @ A0


def qsvt_oracle(A: np.ndarray, phases) -> np.ndarray:
    """``P^(SV)(A)`` via the 2x2 signal-processing product per singular value."""
    W, s, Vh = np.linalg.svd(A)
    vals = []
    for sigma in s:
        c = math.sqrt(max(0.0, 1.0 - sigma * sigma))
        R = np.array([[sigma, c], [c, -sigma]])
        out = np.diag([np.exp(0.5j * phases[0]), np.exp(-0.5j * phases[0])])
        for j in range(1, len(phases)):
            out = np.diag([np.exp(0.5j * phases[j]), np.exp(-0.5j * phases[j])]) @ R @ out
        vals.append(out[0, 0])
    return W @ np.diag(vals) @ Vh


# -- sweeps -------------------------------------------------------------------------

@dataclass
class SweepSpec:
    family: str
    n_values: list
    max_widths: list = field(default_factory=lambda: [None])
    objective: str = "cx"
    timeout: float = 1000.0
    seed: int = 0
    degree: int = 3

    def __post_init__(self):
        if self.family not in ("walk", "qsvt"):
            raise ValueError(f"unknown family {self.family!r}")
        if any(n < 1 for n in self.n_values):
            raise ValueError("N must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass
class SweepRow:
    family: str
    N: int
    max_width: int | None
    objective: str
    width: int | None
    depth: int | None
    cx: int | None
    gen_time_ms: float
    optimal: bool
    timeout: bool

    def as_csv(self) -> dict:
        out = {k: getattr(self, k) for k in CSV_FIELDS}
        out["max_width"] = "" if self.max_width is None else self.max_width
        for k in ("width", "depth", "cx"):
            out[k] = "" if out[k] is None else out[k]
        out["gen_time_ms"] = f"{self.gen_time_ms:.1f}"
        out["optimal"] = int(self.optimal)
        out["timeout"] = int(self.timeout)
        return out


def build_family(family: str, N: int, degree: int = 3, seed: int = 0) -> Model:
    return build_walk_model(N) if family == "walk" else build_qsvt_model(N, degree, seed=seed)


def _run_row(spec: SweepSpec, N: int, width, baseline: bool = False) -> SweepRow:
    model = build_family(spec.family, N, spec.degree, spec.seed)
    constraints = ConstraintSet(max_width=width)
    t0 = time.perf_counter()
    try:
        if baseline:
            sol = _baseline_solution(model, constraints, spec)
        else:
            res = synthesize(model, constraints, spec.objective, budget=Budget(spec.timeout), seed=spec.seed)
            sol = res.solution
    except (Infeasible, SearchTimeout) as exc:
        ms = (time.perf_counter() - t0) * 1e3
        return SweepRow(spec.family, N, width, spec.objective, None, None, None, ms, False,
                        isinstance(exc, SearchTimeout))
    ms = (time.perf_counter() - t0) * 1e3
    m = sol.metrics
    return SweepRow(spec.family, N, width, spec.objective, m.width, m.depth, m.cx, ms, sol.optimal, sol.timed_out)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """One row per ``(N, max_width)`` pair, in that order regardless of ``jobs``."""
    tasks = [(N, w) for N in spec.n_values for w in spec.max_widths]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda t: _run_row(spec, *t), tasks))
    return [_run_row(spec, N, w) for N, w in tasks]


def _baseline_solution(model: Model, constraints: ConstraintSet, spec: SweepSpec):
    """Every library call pinned to its zero-aux implementation."""
    graph = reduce_graph(lower_to_graph(model))
    nodes = {}
    for n, node in graph.nodes.items():
        if node.kind == "lib":
            rows = tuple(r for r in node.options if r.aux == 0)
            nodes[n] = type(node)(node.id, node.kind, node.op, rows or node.options, node.min_counts)
        else:
            nodes[n] = node
    pinned = type(graph)(nodes, graph.order, graph.functional, graph.artificial, graph.reduced, graph.next_id)
    sol = solve(pinned, constraints, spec.objective, budget=Budget(spec.timeout), seed=spec.seed)
    check_metrics(sol, emit(sol))
    return sol


def run_baseline(family: str, n_values, objective: str = "cx", timeout: float = 1000.0,
                 seed: int = 0, max_width: int | None = None, degree: int = 3) -> list[SweepRow]:
    """Fixed-implementation reference sweep: no aux qubits, hence no reuse decisions."""
    spec = SweepSpec(family, list(n_values), [max_width], objective, timeout, seed, degree)
    return [_run_row(spec, N, max_width, baseline=True) for N in spec.n_values]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r.as_csv())
    return buf.getvalue()


def loglog_slope(ns, values) -> float:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
