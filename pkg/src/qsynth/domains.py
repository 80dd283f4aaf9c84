"""Per-node resource domains and their propagation against global constraints.

A domain is an ordered set of whole :class:`ResourceTuple` rows (aux count,
depth, gate counts, variant id); pruning always removes whole rows, so the
coupling between coordinates of one implementation is structural.

Propagation applies three optimistic rules until nothing changes:

counts
    ``committed + t.count + sum of other unplaced minima <= cap``
depth
    ``head(n) + t.depth + tail(n) <= max_depth`` where head/tail are longest
    wire paths over per-node minimum depths (placed nodes contribute their
    real end depth)
width
    ``t.aux <= max_width - functional - must_live(n)`` where ``must_live``
    counts allocated scratch qubits that are certainly still live when ``n``
    runs; the node currently being decided uses the exact live count.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Callable

GATE_CLASSES = ("cx", "single")
OBJECTIVES = ("none", "width", "depth") + GATE_CLASSES


@dataclass(frozen=True, order=True)
class ResourceTuple:
    aux: int
    depth: int
    counts: tuple[int, ...]  # aligned with GATE_CLASSES
    variant: str = ""

    def __post_init__(self):
        if self.aux < 0 or self.depth < 0 or any(c < 0 for c in self.counts):
            raise ValueError(f"negative resource in {self}")

    def count(self, gate_class: str) -> int:
        return self.counts[GATE_CLASSES.index(gate_class)]

    @property
    def cx(self) -> int:
        return self.counts[0]

    def coordinates(self) -> tuple[int, ...]:
        return (self.aux, self.depth) + tuple(self.counts)

    def dominates(self, other: "ResourceTuple") -> bool:
        """Better-or-equal on every tracked coordinate (and not identical)."""
        a, b = self.coordinates(), other.coordinates()
        return all(x <= y for x, y in zip(a, b)) and a != b


def make_tuple(aux=0, depth=0, cx=0, single=0, variant="") -> ResourceTuple:
    return ResourceTuple(aux, depth, (cx, single), variant)


@dataclass(frozen=True)
class ConstraintSet:
    max_width: int | None = None
    max_depth: int | None = None
    max_counts: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        for v in (self.max_width, self.max_depth, *dict(self.max_counts).values()):
            if v is not None and v < 0:
                raise ValueError("constraint bounds must be non-negative")
        for k, _ in self.max_counts:
            if k not in GATE_CLASSES:
                raise ValueError(f"unknown gate class {k!r}")

    @classmethod
    def make(cls, max_width=None, max_depth=None, **counts) -> "ConstraintSet":
        caps = tuple(sorted((k.removeprefix("max_"), v) for k, v in counts.items() if v is not None))
        return cls(max_width, max_depth, caps)

    def cap(self, gate_class: str) -> int | None:
        return dict(self.max_counts).get(gate_class)

    @property
    def empty(self) -> bool:
        return self.max_width is None and self.max_depth is None and not self.max_counts

    def bound(self, objective: str) -> int | None:
        if objective == "width":
            return self.max_width
        if objective == "depth":
            return self.max_depth
        return self.cap(objective)

    def tightened(self, objective: str, value: int) -> "ConstraintSet":
        """Require ``objective <= value`` (keeps a tighter existing bound)."""
        cur = self.bound(objective)
        value = value if cur is None else min(cur, value)
        if objective == "width":
            return replace(self, max_width=value)
        if objective == "depth":
            return replace(self, max_depth=value)
        caps = dict(self.max_counts)
        caps[objective] = value
        return replace(self, max_counts=tuple(sorted(caps.items())))


def objective_key(objective: str) -> Callable[[ResourceTuple], tuple]:
    """Row order for NodeValues: the objective's coordinate first."""
    def coord(t: ResourceTuple):
        if objective == "width":
            return t.aux
        if objective == "depth":
            return t.depth
        if objective in GATE_CLASSES:
            return t.count(objective)
        return 0
    return lambda t: (coord(t), t.cx, t.depth, t.aux) + tuple(t.counts[1:]) + (t.variant,)


@dataclass(frozen=True)
class JournalEntry:
    decision: int
    node: int
    removed: tuple | None  # None marks a domain that was added


class DomainStore:
    """Mutable domains with an undo journal.

    Every removal is journaled as ``(decision index, node, removed rows)``;
    :meth:`undo` replays the journal backwards and re-merges rows by their
    original rank, so domains are restored exactly.
    """

    def __init__(self):
        self._dom: dict[int, list[ResourceTuple]] = {}
        self._rank: dict[int, dict[ResourceTuple, int]] = {}
        self.journal: list[JournalEntry] = []
        self.decision = 0

    def add(self, node: int, tuples) -> None:
        if node in self._dom:
            raise ValueError(f"node {node} already has a domain")
        rows = list(dict.fromkeys(tuples))
        self._dom[node] = rows
        self._rank[node] = {t: i for i, t in enumerate(rows)}
        self.journal.append(JournalEntry(self.decision, node, None))

    def __contains__(self, node) -> bool:
        return node in self._dom

    def get(self, node: int) -> tuple[ResourceTuple, ...]:
        return tuple(self._dom[node])

    def size(self, node: int) -> int:
        return len(self._dom[node])

    def nodes(self):
        return list(self._dom)

    def remove(self, node: int, rows) -> int:
        rows = [t for t in rows if t in self._rank[node]]
        if not rows:
            return 0
        drop = set(rows)
        cur = self._dom[node]
        removed = tuple(t for t in cur if t in drop)
        if removed:
            self._dom[node] = [t for t in cur if t not in drop]
            self.journal.append(JournalEntry(self.decision, node, removed))
        return len(removed)

    def assign(self, node: int, row: ResourceTuple) -> None:
        self.remove(node, [t for t in self._dom[node] if t != row])

    def mark(self) -> int:
        return len(self.journal)

    def undo(self, mark: int) -> None:
        while len(self.journal) > mark:
            e = self.journal.pop()
            if e.removed is None:
                del self._dom[e.node]
                del self._rank[e.node]
                continue
            rank = self._rank[e.node]
            self._dom[e.node] = sorted(self._dom[e.node] + list(e.removed), key=rank.__getitem__)

    def snapshot(self) -> dict:
        return {n: tuple(v) for n, v in self._dom.items()}

    def digest(self) -> str:
        text = repr(sorted((n, tuple(v)) for n, v in self._dom.items()))
        return hashlib.sha256(text.encode()).hexdigest()

    def min_count(self, node: int, k: int) -> int:
        return min(t.counts[k] for t in self._dom[node])

    def min_depth(self, node: int) -> int:
        return min(t.depth for t in self._dom[node])

    def min_aux(self, node: int) -> int:
        return min(t.aux for t in self._dom[node])


@dataclass
class PartialState:
    """What propagation needs to know about a partial solution."""

    placed: set = field(default_factory=set)
    ends: dict = field(default_factory=dict)
    committed: tuple = (0,) * len(GATE_CLASSES)
    n_phys: int = 0
    pool_size: int = 0
    current: int | None = None

    @property
    def live(self) -> int:
        return self.n_phys - self.pool_size


# -- bounds -----------------------------------------------------------------------

def _unplaced(graph, state):
    return [n for n in graph.order if n not in state.placed]


def _node_min_counts(store, graph, n):
    node = graph.nodes[n]
    if node.kind == "composite":
        return node.min_counts
    return tuple(store.min_count(n, k) for k in range(len(GATE_CLASSES)))


def _node_min_depth(store, graph, n):
    return 0 if graph.nodes[n].kind == "composite" else store.min_depth(n)


def bound_gate_count(store: DomainStore, graph, state) -> dict[str, int]:
    """Committed counts plus the minimum of every unplaced domain, per class."""
    total = list(state.committed)
    for n in _unplaced(graph, state):
        for k, c in enumerate(_node_min_counts(store, graph, n)):
            total[k] += c
    return dict(zip(GATE_CLASSES, total))


def _heads_tails(store, graph, state):
    pending = _unplaced(graph, state)
    mind = {n: _node_min_depth(store, graph, n) for n in pending}
    head = {}
    for n in pending:  # program order is a topological order
        h = 0
        for p in graph.wire_preds[n]:
            h = max(h, state.ends[p] if p in state.placed else head[p] + mind[p])
        head[n] = h
    tail = {}
    for n in reversed(pending):
        tail[n] = max((mind[s] + tail[s] for s in graph.wire_succs[n] if s in tail), default=0)
    return head, tail, mind


def bound_depth(store: DomainStore, graph, state) -> int:
    """Longest wire path with minimum depths, including committed end depths."""
    best = max((state.ends[n] for n in state.placed if n in state.ends), default=0)
    head, tail, mind = _heads_tails(store, graph, state)
    for n in head:
        best = max(best, head[n] + mind[n] + tail[n])
    return best


def must_live(graph, state, n: int) -> int:
    """Scratch qubits that are certainly allocated while ``n`` runs (excluding ``n``'s own)."""
    if n == state.current:
        return state.live
    total = 0
    desc = graph.descendants(n)
    anc = graph.ancestors(n)
    for var, (a, f) in graph.scratch.items():
        if a == n or f is None or f in state.placed or f not in desc:
            continue
        if a in state.placed or a in anc:
            total += graph.nodes[a].options[0].aux
    return total


def bound_width(store: DomainStore, graph, state, node: int, constraints: ConstraintSet) -> int | None:
    """Largest admissible aux count for ``node``; ``None`` when width is unconstrained."""
    if constraints.max_width is None:
        return None
    return constraints.max_width - graph.num_functional - must_live(graph, state, node)


# -- propagation --------------------------------------------------------------------

def propagate(store: DomainStore, constraints: ConstraintSet, graph, state,
              trace: Callable | None = None) -> bool:
    """Prune rows with no optimistic completion; ``False`` when a domain empties."""
    if constraints.empty:
        return True
    caps = [(k, constraints.cap(c)) for k, c in enumerate(GATE_CLASSES) if constraints.cap(c) is not None]
    width = constraints.max_width
    depth = constraints.max_depth
    while True:
        changed = False
        pending = [n for n in _unplaced(graph, state) if graph.nodes[n].kind != "composite"]
        if caps:
            mins = {n: _node_min_counts(store, graph, n) for n in _unplaced(graph, state)}
            for k, cap in caps:
                slack_all = cap - state.committed[k] - sum(m[k] for m in mins.values())
                for n in pending:
                    limit = slack_all + mins[n][k]
                    bad = [t for t in store.get(n) if t.counts[k] > limit]
                    if bad:
                        changed |= _prune(store, n, bad, f"{GATE_CLASSES[k]} > {limit}", trace)
                        if not store.size(n):
                            return False
                        mins[n] = _node_min_counts(store, graph, n)
                        slack_all = cap - state.committed[k] - sum(m[k] for m in mins.values())
        if depth is not None:
            head, tail, _ = _heads_tails(store, graph, state)
            for n in pending:
                limit = depth - head[n] - tail[n]
                bad = [t for t in store.get(n) if t.depth > limit]
                if bad:
                    changed |= _prune(store, n, bad, f"depth > {limit}", trace)
                    if not store.size(n):
                        return False
        if width is not None:
            for n in pending:
                if graph.nodes[n].kind == "free":
                    continue
                limit = width - graph.num_functional - must_live(graph, state, n)
                bad = [t for t in store.get(n) if t.aux > limit]
                if bad:
                    changed |= _prune(store, n, bad, f"aux > {limit}", trace)
                    if not store.size(n):
                        return False
        if not changed:
            return True


def _prune(store, n, rows, reason, trace) -> bool:
    removed = store.remove(n, rows)
    if trace is not None:
        for t in rows:
            trace(n, t, reason)
    return removed > 0


# -- skipping -----------------------------------------------------------------------

@dataclass(frozen=True)
class DecisionInfo:
    """Summary of the decision just applied, as seen by the skip rules."""

    kind: str
    domain_was_singleton: bool = False
    depth_constrained: bool = True
    depth_changed: bool = True
    had_options: bool = True


def should_skip_propagation(last: DecisionInfo, bound_tightened: bool) -> bool:
    """Whether propagation may be skipped after ``last``.

    Never skipped right after a branch-and-bound tightening.
    """
    if bound_tightened:
        return False
    if last.kind in ("ReuseCount", "LogicFlow"):
        return True
    if last.kind == "NodeValues":
        return last.domain_was_singleton
    if last.kind == "ReuseOptions":
        return (not last.depth_constrained) or (not last.depth_changed) or (not last.had_options)
    return False


# -- initialization -------------------------------------------------------------------

def remove_dominated(rows) -> list[ResourceTuple]:
    """Drop rows matched or beaten on every coordinate; keep the first of exact ties."""
    rows = list(rows)
    keep = []
    for i, t in enumerate(rows):
        ct = t.coordinates()
        dominated = False
        for j, u in enumerate(rows):
            if i == j:
                continue
            cu = u.coordinates()
            if all(x <= y for x, y in zip(cu, ct)) and (cu != ct or j < i):
                dominated = True
                break
        if not dominated:
            keep.append(t)
    return keep


def initial_rows(rows, constraints: ConstraintSet, objective: str, num_functional: int,
                 kind: str = "lib", singleton: bool | None = None) -> list[ResourceTuple]:
    """Truncate, optionally reduce to the objective's best row, drop dominated rows.

    The singleton reduction applies by default only when an objective is set
    and no constraint competes with it.
    """
    rows = list(rows)
    if constraints.max_width is not None and kind != "free":
        rows = [t for t in rows if num_functional + t.aux <= constraints.max_width]
    if constraints.max_depth is not None:
        rows = [t for t in rows if t.depth <= constraints.max_depth]
    for c, cap in constraints.max_counts:
        rows = [t for t in rows if t.count(c) <= cap]
    key = objective_key(objective)
    if singleton is None:
        singleton = objective != "none" and constraints.empty
    if singleton and rows:
        rows = [min(rows, key=key)]
    rows = remove_dominated(rows)
    return sorted(rows, key=key)


def initialize_domains(graph, constraints: ConstraintSet, objective: str = "none",
                       store: DomainStore | None = None, nodes=None,
                       singleton: bool | None = None) -> tuple[DomainStore, bool]:
    """Create domains for ``nodes`` (default: all non-composite nodes of ``graph``).

    Returns the store and ``False`` if some domain came out empty.
    """
    store = store if store is not None else DomainStore()
    ok = True
    for n in graph.order if nodes is None else nodes:
        node = graph.nodes[n]
        if node.kind == "composite":
            store.add(n, [ResourceTuple(0, 0, (0,) * len(GATE_CLASSES), "composite")])
            continue
        rows = initial_rows(node.options, constraints, objective, graph.num_functional, node.kind, singleton)
        store.add(n, rows)
        ok = ok and bool(rows)
    return store, ok
