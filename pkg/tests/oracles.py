"""Independent brute-force oracles shared by the solver, domain and acceptance tests.

Nothing here calls the search engine.  The resource model is restated from
first principles: a node starts when its wire predecessors have ended and the
scratch qubits it reuses were last released; its own scratch qubits go back to
the pool at its end; width counts functional plus every scratch qubit ever
created.
"""

from __future__ import annotations

import itertools
import random

from qsynth.callgraph import CallGraph, synthetic_node, topological_orders
from qsynth.domains import ConstraintSet, make_tuple


def random_instance(rng: random.Random, max_nodes=4, max_rows=3, n_func=3, max_aux=2):
    """Small random graph of synthetic nodes with random rows and constraints."""
    n = rng.randint(1, max_nodes)
    functional = [("q", i) for i in range(n_func)]
    nodes = {}
    for i in range(n):
        qs = rng.sample(functional, rng.randint(1, n_func))
        rows = [make_tuple(aux=rng.randint(0, max_aux), depth=rng.randint(1, 6), cx=rng.randint(0, 12),
                           single=rng.randint(0, 3), variant=f"v{j}")
                for j in range(rng.randint(1, max_rows))]
        nodes[i] = synthetic_node(i, f"f{rng.randint(0, 1)}", qs, rows)
    graph = CallGraph(nodes, range(n), functional)
    caps = {}
    if rng.random() < 0.5:
        caps["max_width"] = n_func + rng.randint(0, 3)
    if rng.random() < 0.4:
        caps["max_depth"] = rng.randint(3, 14)
    if rng.random() < 0.4:
        caps["max_cx"] = rng.randint(5, 30)
    return graph, ConstraintSet.make(**caps)


def _metrics_value(width, depth, counts, objective):
    if objective == "width":
        return width
    if objective == "depth":
        return depth
    return counts[{"cx": 0, "single": 1}[objective]]


def enumerate_solutions(graph: CallGraph, fixed=None, reuse="subsets"):
    """Yield ``(width, depth, (cx, single))`` for every complete schedule.

    ``reuse="subsets"`` tries every subset of the pool of every size;
    ``reuse="max"`` only reuses as many pool qubits as possible (cheapest
    width), still over all subsets.
    """
    fixed = fixed or {}
    F = len(graph.functional)
    for order in topological_orders(graph):
        yield from _schedule(graph, order, 0, {}, [], 0, (0, 0), 0, fixed, F, reuse)


def _schedule(graph, order, i, ends, pool, n_phys, counts, depth, fixed, F, reuse):
    if i == len(order):
        yield F + n_phys, depth, counts
        return
    n = order[i]
    node = graph.nodes[n]
    rows = [fixed[n]] if n in fixed else node.options
    dep = max((ends[p] for p in graph.wire_preds[n]), default=0)
    for row in rows:
        top = min(row.aux, len(pool))
        ks = [top] if reuse == "max" else range(top + 1)
        for k in ks:
            for subset in itertools.combinations(range(len(pool)), k):
                start = max([dep] + [pool[j][1] for j in subset])
                end = start + row.depth
                new = row.aux - k
                ids = [pool[j][0] for j in subset] + list(range(n_phys, n_phys + new))
                rest = [e for j, e in enumerate(pool) if j not in subset] + [(q, end) for q in ids]
                yield from _schedule(graph, order, i + 1, {**ends, n: end}, rest, n_phys + new,
                                     (counts[0] + row.cx, counts[1] + row.count("single")),
                                     max(depth, end), fixed, F, reuse)


def satisfies(sol, constraints: ConstraintSet) -> bool:
    width, depth, counts = sol
    if constraints.max_width is not None and width > constraints.max_width:
        return False
    if constraints.max_depth is not None and depth > constraints.max_depth:
        return False
    caps = dict(constraints.max_counts)
    if "cx" in caps and counts[0] > caps["cx"]:
        return False
    if "single" in caps and counts[1] > caps["single"]:
        return False
    return True


def brute_force_optimum(graph, constraints, objective, fixed=None):
    """Best objective value over all feasible schedules, or ``None`` if infeasible."""
    best = None
    for sol in enumerate_solutions(graph, fixed):
        if satisfies(sol, constraints):
            v = _metrics_value(*sol, objective)
            best = v if best is None else min(best, v)
    return best


def has_feasible_completion(graph, constraints, fixed) -> bool:
    return any(satisfies(s, constraints) for s in enumerate_solutions(graph, fixed))


# -- reuse windows vs. arbitrary subsets --------------------------------------------

def reuse_sequence_optimum(pool_depths, consumers, chooser):
    """Minimal final depth of a consumer sequence drawing scratch qubits from a pool.

    ``consumers`` are ``(dep_depth, node_depth, k)``; each takes exactly ``k``
    pool qubits (clipped to the pool size) and returns them at its end.
    ``chooser(pool, k)`` lists the candidate subsets as tuples of pool indices.
    """
    best = None

    def rec(pool, i, depth):
        nonlocal best
        if i == len(consumers):
            best = depth if best is None else min(best, depth)
            return
        dep, d, k = consumers[i]
        k = min(k, len(pool))
        for subset in chooser(pool, k):
            start = max([dep] + [pool[j] for j in subset])
            end = start + d
            rest = [x for j, x in enumerate(pool) if j not in subset] + [end] * k
            rec(rest, i + 1, max(depth, end))

    rec(list(pool_depths), 0, max(pool_depths, default=0))
    return best


def all_subsets(pool, k):
    return list(itertools.combinations(range(len(pool)), k))
