import random

import pytest

from oracles import enumerate_solutions
from qsynth.benchmarks import build_walk_model
from qsynth.callgraph import (
    CallGraph,
    lower_to_graph,
    next_candidates,
    reduce_graph,
    synthetic_node,
    topological_orders,
)
from qsynth.domains import make_tuple
from qsynth.model import model_from_dict

ROWS = (make_tuple(aux=0, depth=3, cx=4, variant="a"), make_tuple(aux=1, depth=2, cx=2, variant="b"))


def graph_of(body, variables=None):
    return lower_to_graph(model_from_dict({"entry": "main", "variables": variables or {"q": 4},
                                           "functions": {"main": {"params": [], "body": body}}}))


def synthetic(spec, functional=("a", "b", "c")):
    """``spec``: list of (name, qubit names)."""
    nodes = {i: synthetic_node(i, name, [(q, 0) for q in qs], ROWS) for i, (name, qs) in enumerate(spec)}
    return CallGraph(nodes, range(len(spec)), [(q, 0) for q in functional])


def test_disjoint_calls_have_no_edges():
    g = graph_of([{"gate": "H", "qubits": ["q[0]"]}, {"call": "hadamard_transform", "args": ["q[1:4]"]}])
    assert len(g) == 2 and g.edges() == []


def test_chain_is_a_path():
    g = synthetic([("f", "a"), ("g", "a"), ("h", "a")])
    assert [(u, v) for u, v, _ in g.edges()] == [(0, 1), (1, 2)]
    assert g.is_dag()


def test_single_step_controlled_increments_depend_on_the_coin_hadamard():
    g = lower_to_graph(build_walk_model(3))
    h = next(n for n in g.order if g.nodes[n].op.function == "h")
    mcx = [n for n in g.order if g.nodes[n].op.function == "mcx"]
    assert mcx and all(h in g.ancestors(n) for n in mcx)


def test_next_candidates():
    g = synthetic([("s", "ab"), ("l", "a"), ("r", "b"), ("t", "ab")])  # diamond
    assert next_candidates(g, set()) == [0]
    assert next_candidates(g, {0}) == [1, 2]
    assert next_candidates(g, {0, 1, 2, 3}) == []


def test_ten_parallel_hadamards_reduce_to_one_order():
    g = graph_of([{"gate": "H", "qubits": [f"q[{i}]"]} for i in range(10)], {"q": 10})
    assert len(topological_orders(g, limit=50)) == 50
    assert len(topological_orders(reduce_graph(g))) == 1


def test_different_functions_are_not_chained():
    g = graph_of([{"gate": "H", "qubits": ["q[0]"]}, {"gate": "X", "qubits": ["q[1]"]}])
    assert reduce_graph(g).artificial == frozenset()


def test_three_identical_calls_between_shared_neighbours():
    body = [{"call": "hadamard_transform", "args": ["t"]}]
    body += [{"control": f"q[{i}]", "equals": 1, "body": [{"gate": "X", "qubits": [f"t[{i}]"]}]} for i in range(3)]
    body += [{"call": "hadamard_transform", "args": ["t"]}]
    g = graph_of(body, {"q": 3, "t": 3})
    assert {g.nodes[n].op.function for n in g.order[1:4]} == {"mcx"}
    assert len(topological_orders(g)) == 6
    assert len(topological_orders(reduce_graph(g))) == 1


def test_reduce_is_idempotent():
    g = reduce_graph(lower_to_graph(build_walk_model(4)))
    assert reduce_graph(g).artificial == g.artificial


def _is_topological(graph, order):
    pos = {n: i for i, n in enumerate(order)}
    return sorted(order) == sorted(graph.order) and all(pos[u] < pos[v] for u, v, _ in graph.edges())


def test_orders_are_topological_sorts_of_the_unreduced_graph():
    g = graph_of([{"gate": "H", "qubits": ["q[0]"]}, {"gate": "H", "qubits": ["q[1]"]},
                  {"gate": "CX", "qubits": ["q[0]", "q[1]"]}, {"gate": "X", "qubits": ["q[2]"]},
                  {"gate": "X", "qubits": ["q[3]"]}])
    for order in topological_orders(reduce_graph(g)):
        assert _is_topological(g, order)


@pytest.mark.parametrize("seed", range(25))
def test_reducer_preserves_reachable_metrics(seed):
    rng = random.Random(seed)
    spec = [(rng.choice("fg"), "".join(sorted(rng.sample("abc", rng.randint(1, 2))))) for _ in range(rng.randint(2, 5))]
    g = synthetic(spec)
    r = reduce_graph(g)
    assert set(enumerate_solutions(r)) == set(enumerate_solutions(g))


def test_artificial_edges_must_point_forward():
    g = synthetic([("f", "a"), ("g", "b")])
    with pytest.raises(ValueError):
        CallGraph(g.nodes, g.order, g.functional, {(1, 0)})


def test_composite_expansion_inherits_predecessors():
    g = graph_of([{"gate": "H", "qubits": ["q[0]"]},
                  {"select": [[{"gate": "X", "qubits": ["q[1]"]}, {"gate": "X", "qubits": ["q[2]"]}],
                              [{"gate": "H", "qubits": ["q[1]"]}]]}])
    (comp,) = g.composites()
    assert g.nodes[comp].kind == "composite"
    assert g.nodes[comp].min_counts == (0, 1)
    e = g.expand(comp, 0)
    new = [n for n in e.order if n not in g.order]
    assert len(new) == 2 and not e.composites()
    for n in new:
        assert set(g.preds(comp)) <= set(e.preds(n))


def test_dot_dump():
    dot = reduce_graph(synthetic([("f", "a"), ("f", "b"), ("g", "ab")])).to_dot()
    assert dot.startswith("digraph callgraph {")
    assert "style=dashed" in dot and "n0 -> n2" in dot


def test_alloc_free_pairs_are_tracked():
    g = graph_of([{"allocate": "t", "width": 2}, {"gate": "CX", "qubits": ["q[0]", "t[0]"]},
                  {"gate": "CX", "qubits": ["q[0]", "t[0]"]}, {"free": "t"}])
    (var,) = g.scratch
    alloc, free = g.scratch[var]
    assert g.nodes[alloc].kind == "alloc" and g.nodes[free].kind == "free"
    assert free in g.descendants(alloc)
