"""Wire-semantics call graph.

Nodes are library calls, scratch allocations/frees and composite (``select``)
nodes, kept in program order.  Wire edges link consecutive nodes that touch
the same qubit; they carry depth.  Artificial edges (graph reducer) and the
edges that expanded composite bodies inherit from the composite's
predecessors only constrain the order.  All edges point forward in program
order, so every graph is a DAG by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .domains import GATE_CLASSES, ResourceTuple
from .lowering import AllocOp, CompositeOp, FreeOp, LibOp, lower_model
from .model import Model


@dataclass(frozen=True)
class Node:
    id: int
    kind: str  # "lib" | "alloc" | "free" | "composite"
    op: object
    options: tuple = ()
    min_counts: tuple = (0,) * len(GATE_CLASSES)

    @property
    def qubits(self) -> tuple:
        return self.op.qubits

    @property
    def label(self) -> str:
        if self.kind == "lib":
            return self.op.label()
        if self.kind == "composite":
            return f"select@{self.op.site}"
        return f"{self.kind} {self.op.var}"

    def signature(self):
        """Identity used by the reducer: function, shape and domain rows."""
        op = self.op
        return (op.function, op.n_ctrl, op.widths, op.consts, op.inverted, self.options)

    def variant(self, variant_id: str):
        for v in self.op.variants():
            if v.variant_id == variant_id:
                return v
        raise KeyError(f"node {self.id} has no variant {variant_id!r}")


def options_for(op: LibOp) -> tuple:
    rows = []
    for v in op.variants():
        p = v.profile
        rows.append(ResourceTuple(p.aux, p.depth, tuple(p.count(c) for c in GATE_CLASSES), v.variant_id))
    return tuple(rows)


def _composite_min(op: CompositeOp) -> tuple:
    best = None
    for alt in op.alternatives:
        total = [0] * len(GATE_CLASSES)
        for inner in alt:
            if isinstance(inner, LibOp):
                rows = options_for(inner)
                mins = [min(r.counts[k] for r in rows) for k in range(len(GATE_CLASSES))]
            elif isinstance(inner, CompositeOp):
                mins = _composite_min(inner)
            else:
                continue
            total = [a + b for a, b in zip(total, mins)]
        best = tuple(total) if best is None else tuple(min(a, b) for a, b in zip(best, total))
    return best if best is not None else (0,) * len(GATE_CLASSES)


def make_node(nid: int, op) -> Node:
    if isinstance(op, LibOp):
        return Node(nid, "lib", op, options_for(op))
    if isinstance(op, AllocOp):
        return Node(nid, "alloc", op, (ResourceTuple(len(op.qubits), 0, (0,) * len(GATE_CLASSES), "alloc"),))
    if isinstance(op, FreeOp):
        return Node(nid, "free", op, (ResourceTuple(0, 0, (0,) * len(GATE_CLASSES), "free"),))
    if isinstance(op, CompositeOp):
        return Node(nid, "composite", op, (), _composite_min(op))
    raise TypeError(f"cannot make a node from {op!r}")


@dataclass(frozen=True)
class SyntheticOp:
    """Library-like op with hand-written domain rows (tests and fixtures)."""

    name: str
    qubits: tuple
    n_ctrl: int = 0
    consts: tuple = ()
    inverted: bool = False

    @property
    def function(self):
        return self.name

    @property
    def widths(self):
        return (len(self.qubits),)

    def label(self):
        return self.name

    def variants(self):
        return []


def synthetic_node(nid: int, name: str, qubits, rows) -> Node:
    return Node(nid, "lib", SyntheticOp(name, tuple(qubits)), tuple(rows))


class CallGraph:
    """Immutable graph; expansion and reduction return new graphs."""

    def __init__(self, nodes: dict, order, functional, artificial=frozenset(), reduced=False, next_id=None):
        self.nodes = dict(nodes)
        self.order = tuple(order)
        self.functional = tuple(functional)
        self.artificial = frozenset(artificial)
        self.reduced = reduced
        self.next_id = next_id if next_id is not None else max(self.nodes, default=-1) + 1
        self.position = {n: i for i, n in enumerate(self.order)}
        self.wire_preds = {n: [] for n in self.order}
        self.wire_succs = {n: [] for n in self.order}
        self.wire_qubits: dict[tuple[int, int], list] = {}
        last: dict = {}
        for n in self.order:
            for q in self.nodes[n].qubits:
                p = last.get(q)
                if p is not None:
                    if (p, n) not in self.wire_qubits:
                        self.wire_qubits[(p, n)] = []
                        self.wire_preds[n].append(p)
                        self.wire_succs[p].append(n)
                    self.wire_qubits[(p, n)].append(q)
                last[q] = n
        self.art_preds = {n: [] for n in self.order}
        self.art_succs = {n: [] for n in self.order}
        for u, v in sorted(self.artificial):
            if u in self.position and v in self.position:
                if self.position[u] >= self.position[v]:
                    raise ValueError(f"artificial edge {u}->{v} points backwards")
                self.art_preds[v].append(u)
                self.art_succs[u].append(v)
        self.scratch: dict[str, tuple] = {}
        for n in self.order:
            node = self.nodes[n]
            if node.kind == "alloc":
                self.scratch[node.op.var] = (n, self.scratch.get(node.op.var, (None, None))[1])
            elif node.kind == "free":
                a = self.scratch.get(node.op.var, (None, None))[0]
                self.scratch[node.op.var] = (a, n)
        self.scratch = {k: v for k, v in self.scratch.items() if v[0] is not None}

    # structure ------------------------------------------------------------

    @property
    def num_functional(self) -> int:
        return len(self.functional)

    def __len__(self):
        return len(self.order)

    def preds(self, n) -> list:
        return self.wire_preds[n] + [p for p in self.art_preds[n] if p not in self.wire_preds[n]]

    def succs(self, n) -> list:
        return self.wire_succs[n] + [s for s in self.art_succs[n] if s not in self.wire_succs[n]]

    def edges(self) -> list[tuple[int, int, str]]:
        out = [(u, v, "wire") for (u, v) in self.wire_qubits]
        out += [(u, v, "artificial") for (u, v) in sorted(self.artificial)
                if u in self.position and v in self.position and (u, v) not in self.wire_qubits]
        return sorted(out, key=lambda e: (self.position[e[0]], self.position[e[1]], e[2]))

    @cached_property
    def _reach(self):
        desc = {}
        for n in reversed(self.order):
            s = set()
            for m in self.succs(n):
                s.add(m)
                s |= desc[m]
            desc[n] = frozenset(s)
        anc = {n: set() for n in self.order}
        for n, ds in desc.items():
            for m in ds:
                anc[m].add(n)
        return desc, {n: frozenset(v) for n, v in anc.items()}

    def descendants(self, n) -> frozenset:
        return self._reach[0][n]

    def ancestors(self, n) -> frozenset:
        return self._reach[1][n]

    def is_dag(self) -> bool:
        return all(self.position[u] < self.position[v] for u, v, _ in self.edges())

    # composites -------------------------------------------------------------

    def expand(self, node_id: int, alternative: int) -> "CallGraph":
        """Splice one alternative of a composite in place of the node."""
        comp = self.nodes[node_id]
        if comp.kind != "composite":
            raise ValueError(f"node {node_id} is not composite")
        ops = comp.op.alternatives[alternative]
        nodes = dict(self.nodes)
        new_ids = []
        nid = self.next_id
        for op in ops:
            nodes[nid] = make_node(nid, op)
            new_ids.append(nid)
            nid += 1
        i = self.position[node_id]
        order = self.order[:i] + tuple(new_ids) + self.order[i + 1:]
        art = set()
        for u, v in self.artificial:
            if v == node_id:
                art.update((u, w) for w in new_ids)
            elif u == node_id:
                art.update((w, v) for w in new_ids)
            else:
                art.add((u, v))
        for p in self.preds(node_id):
            art.update((p, w) for w in new_ids)
        del nodes[node_id]
        g = CallGraph(nodes, order, self.functional, art, self.reduced, nid)
        if self.reduced:
            g = _reduce(g, only_targets=set(new_ids))
        return g

    def composites(self) -> list[int]:
        return [n for n in self.order if self.nodes[n].kind == "composite"]

    # debug -------------------------------------------------------------------

    def to_dot(self) -> str:
        lines = ["digraph callgraph {", "  rankdir=LR;"]
        for n in self.order:
            node = self.nodes[n]
            shape = {"composite": "box3d", "alloc": "invhouse", "free": "house"}.get(node.kind, "box")
            lines.append(f'  n{n} [label="{n}: {node.label}", shape={shape}];')
        for u, v, kind in self.edges():
            style = "" if kind == "wire" else " [style=dashed]"
            lines.append(f"  n{u} -> n{v}{style};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_graph(ops, functional) -> CallGraph:
    nodes = {i: make_node(i, op) for i, op in enumerate(ops)}
    return CallGraph(nodes, range(len(ops)), functional)


def lower_to_graph(model: Model) -> CallGraph:
    """Lower a validated model to its (unreduced) call graph."""
    functional = [(name, i) for name, w in model.variables.items() for i in range(w)]
    return build_graph(lower_model(model), functional)


def _reduce(graph: CallGraph, only_targets=None) -> CallGraph:
    classes: dict = {}
    for n in graph.order:
        node = graph.nodes[n]
        if node.kind != "lib":
            continue
        key = (node.signature(), frozenset(graph.wire_preds[n]), frozenset(graph.wire_succs[n]))
        classes.setdefault(key, []).append(n)
    art = set(graph.artificial)
    for members in classes.values():
        for u, v in zip(members, members[1:]):
            if only_targets is None or v in only_targets:
                art.add((u, v))
    if art == set(graph.artificial) and graph.reduced:
        return graph
    return CallGraph(graph.nodes, graph.order, graph.functional, art, True, graph.next_id)


def reduce_graph(graph: CallGraph) -> CallGraph:
    """Chain interchangeable nodes with artificial edges (canonical order).

    Two library nodes are interchangeable when they share function, shape,
    domain rows, wire-predecessor set and wire-successor set.
    """
    return _reduce(graph)


def next_candidates(graph: CallGraph, placed) -> list[int]:
    """Unplaced nodes whose predecessors (wire and artificial) are all placed."""
    return [n for n in graph.order
            if n not in placed and all(p in placed for p in graph.wire_preds[n])
            and all(p in placed for p in graph.art_preds[n])]


def topological_orders(graph: CallGraph, limit: int | None = None):
    """Enumerate total orders accepted by repeated :func:`next_candidates`."""
    out = []
    placed: list = []

    def rec():
        if limit is not None and len(out) >= limit:
            return
        cands = next_candidates(graph, set(placed))
        if not cands:
            if len(placed) == len(graph.order):
                out.append(tuple(placed))
            return
        for c in cands:
            placed.append(c)
            rec()
            placed.pop()

    rec()
    return out

