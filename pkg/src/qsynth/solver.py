"""Backtracking search over the decision stack, with branch and bound.

Per node the decisions are::

    NextNode -> NodeValues -> (composite)  LogicFlow -> NextNode ...
                           -> (elementary) ReuseCount -> ReuseOptions -> NodeDone

Every frame on the stack remembers the undo marks of the state trail and of
the domain journal taken before its first option, so trying the next option
or popping the frame restores the exact prior state.  A frame whose options
are exhausted is a node failure and the search backtracks.

When a complete solution is found under an objective, the objective bound
is tightened to ``value - 1`` (all metrics are integers) and the search
continues; exhausting the tree then proves the last incumbent optimal.

Warm-start strategies are the same engine driven by a policy that offers a
single option per decision, with propagation switched off.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .callgraph import CallGraph, next_candidates
from .circuit import Metrics
from .domains import (
    GATE_CLASSES,
    ConstraintSet,
    DecisionInfo,
    DomainStore,
    ResourceTuple,
    initialize_domains,
    propagate,
    should_skip_propagation,
)
from .reuse import AuxPool, apply_reuse, nondominated_choices, reuse_bounds

STRATEGIES = ("greedy-reuse", "min-width", "min-depth", "min-depth-min-reuse", "random")
DEFAULT_TIMEOUT = 1000.0


class SearchError(RuntimeError):
    pass


class Infeasible(SearchError):
    """No solution satisfies the constraints (search exhausted)."""


class SearchTimeout(SearchError):
    """Budget ran out before any solution was found."""


@dataclass
class Budget:
    timeout: float | None = DEFAULT_TIMEOUT
    max_decisions: int | None = None

    def __post_init__(self):
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass
class SearchStats:
    decisions: int = 0
    backtracks: int = 0
    propagations: int = 0
    skipped_propagations: int = 0
    solutions: int = 0
    bound_tightenings: int = 0
    elapsed: float = 0.0

    def merge(self, other: "SearchStats") -> None:
        for k in ("decisions", "backtracks", "propagations", "skipped_propagations",
                  "solutions", "bound_tightenings", "elapsed"):
            setattr(self, k, getattr(self, k) + getattr(other, k))

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("decisions", "backtracks", "propagations",
                                              "skipped_propagations", "solutions", "bound_tightenings")}


@dataclass
class Solution:
    graph: CallGraph
    order: tuple
    rows: dict
    scratch: dict  # node -> scratch qubit ids (lib aux or allocated register)
    starts: dict
    ends: dict
    reuse: tuple  # (consumer node, producer node, scratch qubit id)
    logic: dict  # select site -> alternative
    metrics: Metrics
    optimal: bool = False
    timed_out: bool = False
    strategy: str = "csp"
    stats: SearchStats = field(default_factory=SearchStats)

    def value(self, objective: str) -> int:
        return metric_value(self.metrics, objective)

    def report(self) -> dict:
        F = self.graph.num_functional
        nodes = []
        for n in self.order:
            node = self.graph.nodes[n]
            nodes.append({
                "node": n, "label": node.label, "variant": self.rows[n].variant,
                "aux": [F + q for q in self.scratch.get(n, ())],
                "start": self.starts[n], "end": self.ends[n],
            })
        return {
            "metrics": self.metrics.as_dict(),
            "optimal": self.optimal,
            "timed_out": self.timed_out,
            "strategy": self.strategy,
            "nodes": nodes,
            "reuse": [[c, p, F + q] for c, p, q in self.reuse],
            "logic_flows": dict(sorted(self.logic.items())),
            "stats": self.stats.as_dict(),
        }


def metric_value(metrics: Metrics, objective: str) -> int:
    if objective == "width":
        return metrics.width
    if objective == "depth":
        return metrics.depth
    return metrics.count(objective)


def satisfies(metrics: Metrics, constraints: ConstraintSet) -> bool:
    if constraints.max_width is not None and metrics.width > constraints.max_width:
        return False
    if constraints.max_depth is not None and metrics.depth > constraints.max_depth:
        return False
    return all(metrics.count(c) <= cap for c, cap in constraints.max_counts)


def branch_and_bound_step(constraints: ConstraintSet, value: int, objective: str) -> ConstraintSet:
    """Strict improvement: ``objective < value``, i.e. ``<= value - 1``."""
    return constraints.tightened(objective, value - 1)


# -- policies ---------------------------------------------------------------------

class Policy:
    """Full search: every option, ordered by heuristics."""

    name = "csp"

    def next_node(self, eng, cands):
        return cands

    def node_values(self, eng, node, rows):
        return list(rows)

    def logic_flow(self, eng, node, n_alts):
        return list(range(n_alts))

    def reuse_count(self, eng, node, row, k_min, k_max):
        if k_min > k_max:
            return []
        if not eng.depth_relevant:
            return [k_max]
        ks = list(range(k_min, k_max + 1))
        return ks if eng.objective == "depth" else ks[::-1]

    def reuse_options(self, eng, node, windows):
        return windows if eng.depth_relevant else windows[:1]


def _closest_to_mean(rows):
    mean = sum(t.aux for t in rows) / len(rows)
    return min(rows, key=lambda t: (abs(t.aux - mean), t.cx, t.depth))


class _Strategy(Policy):
    def __init__(self, name: str, seed: int = 0):
        self.name = name
        self.rng = random.Random(seed)

    def next_node(self, eng, cands):
        if self.name == "random":
            return [self.rng.choice(cands)]
        if self.name in ("min-depth", "min-depth-min-reuse"):
            return [min(cands, key=lambda n: (eng.dependency_depth(n), eng.graph.position[n]))]
        if self.name == "greedy-reuse":
            def releases(n):
                node = eng.graph.nodes[n]
                if node.kind == "free":
                    return len(node.qubits)
                if node.kind == "lib":
                    return _closest_to_mean(eng.store.get(n)).aux
                return 0
            return [min(cands, key=lambda n: (-releases(n), -len(eng.graph.succs(n)), eng.graph.position[n]))]
        return [cands[0]]

    def node_values(self, eng, node, rows):
        if not rows:
            return []
        if self.name == "random":
            return [self.rng.choice(list(rows))]
        if self.name == "greedy-reuse":
            return [_closest_to_mean(rows)]
        if self.name == "min-width":
            return [min(rows, key=lambda t: (t.aux, t.cx, t.depth))]
        return [min(rows, key=lambda t: (t.depth, t.cx, t.aux))]

    def logic_flow(self, eng, node, n_alts):
        return [self.rng.randrange(n_alts)] if self.name == "random" else [0]

    def reuse_count(self, eng, node, row, k_min, k_max):
        if k_min > k_max:
            return []
        if self.name == "random":
            return [self.rng.randint(k_min, k_max)]
        if self.name in ("greedy-reuse", "min-width"):
            return [k_max]
        if self.name == "min-depth-min-reuse":
            return [k_min]
        dep = eng.dependency_depth(node)
        free = sum(1 for e in eng.pool.entries if e.depth <= dep)
        return [min(max(free, k_min), k_max)]

    def reuse_options(self, eng, node, windows):
        if self.name == "random":
            return [self.rng.choice(windows)]
        return windows[:1]


def make_policy(name: str, seed: int = 0) -> Policy:
    if name == "csp":
        return Policy()
    if name not in STRATEGIES:
        raise ValueError(f"unknown strategy {name!r}; choose from {STRATEGIES}")
    return _Strategy(name, seed)


def select_strategies(constraints: ConstraintSet, objective: str = "none") -> list[str]:
    """Warm-start strategies for a constraint/objective pattern."""
    width = constraints.max_width is not None or objective == "width"
    depth = constraints.max_depth is not None or objective == "depth"
    if width and depth:
        out = ["min-depth-min-reuse", "min-width", "min-depth"]
    elif width:
        out = ["min-width", "greedy-reuse"]
    elif depth:
        out = ["min-depth", "greedy-reuse"]
    else:
        out = ["greedy-reuse"]
    if not constraints.empty:
        out.append("random")
    return out


# -- engine -----------------------------------------------------------------------

_MISSING = object()
_COMPLETE = object()


@dataclass
class _Frame:
    kind: str
    node: int | None
    options: list
    trail: int
    journal: int
    idx: int = 0


class Engine:
    """One search run.  Attributes double as the propagation state view."""

    def __init__(self, graph: CallGraph, constraints: ConstraintSet, objective: str = "none",
                 policy: Policy | None = None, budget: Budget | None = None, use_propagation: bool = True,
                 find_all: bool = False, trace=None, log_decisions: bool = False, singleton: bool | None = None):
        if objective not in ("none", "width", "depth") + GATE_CLASSES:
            raise ValueError(f"unknown objective {objective!r}")
        self.graph = graph
        self.constraints = constraints
        self.objective = objective
        self.policy = policy or Policy()
        self.budget = budget or Budget()
        self.use_propagation = use_propagation
        self.find_all = find_all
        self.trace = trace
        self.log = [] if log_decisions else None
        self.singleton = singleton
        self.stats = SearchStats()
        self.store = DomainStore()
        self.depth_relevant = constraints.max_depth is not None or objective == "depth"
        # trail-managed state
        self.trail: list = []
        self.placed: set = set()
        self.order: list = []
        self.rows: dict = {}
        self.scratch: dict = {}
        self.starts: dict = {}
        self.ends: dict = {}
        self.owner: dict = {}
        self.reuse: list = []
        self.logic: dict = {}
        self.pool = AuxPool()
        self.n_phys = 0
        self.committed = (0,) * len(GATE_CLASSES)
        self.current = None
        self.epoch = 0
        self.prop_epoch = -1
        self.incumbent: Solution | None = None
        self.orders_found: set = set()
        self.exhausted = False
        self.timed_out = False

    # propagation-state view ------------------------------------------------

    @property
    def pool_size(self) -> int:
        return len(self.pool)

    @property
    def live(self) -> int:
        return self.n_phys - len(self.pool)

    def dependency_depth(self, n: int) -> int:
        return max((self.ends[p] for p in self.graph.wire_preds[n]), default=0)

    # trail ---------------------------------------------------------------------

    def _set(self, d: dict, k, v):
        self.trail.append((0, d, k, d.get(k, _MISSING)))
        d[k] = v

    def _attr(self, name: str, v):
        self.trail.append((1, name, getattr(self, name)))
        setattr(self, name, v)

    def _add(self, s: set, x):
        self.trail.append((2, s, x))
        s.add(x)

    def _append(self, lst: list, x):
        self.trail.append((3, lst))
        lst.append(x)

    def _undo_to(self, trail_mark: int, journal_mark: int):
        while len(self.trail) > trail_mark:
            e = self.trail.pop()
            if e[0] == 0:
                _, d, k, old = e
                if old is _MISSING:
                    del d[k]
                else:
                    d[k] = old
            elif e[0] == 1:
                setattr(self, e[1], e[2])
            elif e[0] == 2:
                e[1].discard(e[2])
            else:
                e[1].pop()
        self.store.undo(journal_mark)

    def _frame(self, kind, node, options) -> _Frame:
        return _Frame(kind, node, list(options), len(self.trail), self.store.mark())

    def _note(self, kind, node, value=None):
        if self.log is not None:
            self.log.append((kind, node, value))

    # decisions --------------------------------------------------------------------

    def _maybe_propagate(self, info: DecisionInfo) -> bool:
        if not self.use_propagation:
            return True
        if should_skip_propagation(info, self.prop_epoch != self.epoch):
            self.stats.skipped_propagations += 1
            return True
        self.stats.propagations += 1
        ok = propagate(self.store, self.constraints, self.graph, self, self.trace)
        self._attr("prop_epoch", self.epoch)
        return ok

    def _next_node_frame(self):
        if all(n in self.placed for n in self.graph.order):
            return _COMPLETE
        cands = next_candidates(self.graph, self.placed)
        frees = [n for n in cands if self.graph.nodes[n].kind == "free"]
        if frees:
            # releasing a ready scratch register never hurts: its end depth is fixed
            cands = frees[:1]
        return self._frame("NextNode", None, self.policy.next_node(self, cands))

    def _apply(self, f: _Frame, opt):
        kind = f.kind
        self._note(kind, f.node, opt if not isinstance(opt, ResourceTuple) else opt.variant)
        if kind == "NextNode":
            self._attr("current", opt)
            if not self._maybe_propagate(DecisionInfo("NextNode")):
                return None
            return self._frame("NodeValues", opt, self.policy.node_values(self, opt, self.store.get(opt)))
        if kind == "NodeValues":
            return self._node_values(f.node, opt)
        if kind == "LogicFlow":
            return self._logic_flow(f.node, opt)
        if kind == "ReuseCount":
            windows = nondominated_choices(self.pool, opt)
            if not self._maybe_propagate(DecisionInfo("ReuseCount")):
                return None
            return self._frame("ReuseOptions", f.node, self.policy.reuse_options(self, f.node, windows))
        if kind == "ReuseOptions":
            return self._reuse_options(f.node, opt)
        raise AssertionError(kind)

    def _node_values(self, n, row):
        node = self.graph.nodes[n]
        singleton = self.store.size(n) == 1
        self.store.assign(n, row)
        if node.kind == "composite":
            if not self._maybe_propagate(DecisionInfo("NodeValues", domain_was_singleton=singleton)):
                return None
            return self._frame("LogicFlow", n, self.policy.logic_flow(self, n, len(node.op.alternatives)))
        for k, c in enumerate(GATE_CLASSES):
            cap = self.constraints.cap(c)
            if cap is not None and self.committed[k] + row.counts[k] > cap:
                return None
        if not self._maybe_propagate(DecisionInfo("NodeValues", domain_was_singleton=singleton)):
            return None
        if node.kind == "free":
            return self._place_free(n)
        W = self.constraints.max_width
        k_min, k_max = reuse_bounds(row.aux, len(self.pool), self.n_phys, self.graph.num_functional, W)
        return self._frame("ReuseCount", n, self.policy.reuse_count(self, n, row, k_min, k_max))

    def _logic_flow(self, n, alt):
        node = self.graph.nodes[n]
        self._attr("graph", self.graph.expand(n, alt))
        self._set(self.logic, node.op.site, alt)
        self._attr("current", None)
        fresh = [m for m in self.graph.order if m not in self.store]
        _, ok = initialize_domains(self.graph, self.constraints, self.objective, self.store, fresh, self.singleton)
        if not ok:
            return None
        self._note("Expand", n, alt)
        if not self._maybe_propagate(DecisionInfo("LogicFlow")):
            return None
        return self._next_node_frame()

    def _commit(self, n, row, start, end):
        self._add(self.placed, n)
        self._append(self.order, n)
        self._set(self.rows, n, row)
        self._set(self.starts, n, start)
        self._set(self.ends, n, end)
        self._attr("committed", tuple(a + b for a, b in zip(self.committed, row.counts)))
        self._attr("current", None)
        self._note("NodeDone", n)

    def _place_free(self, n):
        node = self.graph.nodes[n]
        start = self.dependency_depth(n)
        if self.constraints.max_depth is not None and start > self.constraints.max_depth:
            return None
        alloc = self.graph.scratch[node.op.var][0]
        qubits = self.scratch[alloc]
        self._attr("pool", self.pool.give(qubits, start))
        for q in qubits:
            self._set(self.owner, q, n)
        self._commit(n, self.store.get(n)[0], start, start)
        return self._next_node_frame()

    def _reuse_options(self, n, choice):
        node = self.graph.nodes[n]
        row = self.store.get(n)[0]
        dep = self.dependency_depth(n)
        res = apply_reuse(choice, self.pool, dep, row.depth, row.aux, self.n_phys, self.n_phys,
                          release=node.kind == "lib")
        D, W = self.constraints.max_depth, self.constraints.max_width
        if D is not None and res.end > D:
            return None
        if W is not None and self.graph.num_functional + res.n_phys > W:
            return None
        for e in choice.entries:
            self._append(self.reuse, (n, self.owner[e.qubit], e.qubit))
        self._attr("pool", res.pool)
        self._attr("n_phys", res.n_phys)
        self._set(self.scratch, n, res.qubits)
        if node.kind == "lib":
            for q in res.qubits:
                self._set(self.owner, q, n)
        self._commit(n, row, res.start, res.end)
        info = DecisionInfo("ReuseOptions", depth_constrained=D is not None,
                            depth_changed=res.start > dep, had_options=choice.k > 0)
        if not self._maybe_propagate(info):
            return None
        return self._next_node_frame()

    # solutions ---------------------------------------------------------------------

    def _current_metrics(self) -> Metrics:
        depth = max(self.ends.values(), default=0)
        return Metrics(self.graph.num_functional + self.n_phys, depth,
                       tuple(sorted(zip(GATE_CLASSES, self.committed))))

    def _on_solution(self) -> bool:
        metrics = self._current_metrics()
        if not satisfies(metrics, self.constraints):
            return False
        self.stats.solutions += 1
        sol = Solution(self.graph, tuple(self.order), dict(self.rows), dict(self.scratch), dict(self.starts),
                       dict(self.ends), tuple(self.reuse), dict(self.logic), metrics,
                       strategy=self.policy.name, stats=self.stats)
        self._note("Solution", None, metrics.as_dict())
        if self.find_all:
            self.orders_found.add(sol.order)
            self.incumbent = self.incumbent or sol
            return False
        self.incumbent = sol
        if self.objective == "none":
            return True
        value = sol.value(self.objective)
        if value <= 0:  # nothing can beat zero
            self.exhausted = True
            return True
        self.constraints = branch_and_bound_step(self.constraints, value, self.objective)
        self.epoch += 1
        self.stats.bound_tightenings += 1
        return False

    def _out_of_budget(self, t0) -> bool:
        b = self.budget
        if b.max_decisions is not None and self.stats.decisions >= b.max_decisions:
            return True
        if b.timeout is not None and self.stats.decisions % 64 == 0:
            return time.perf_counter() - t0 > b.timeout
        return False

    def run(self) -> Solution | None:
        t0 = time.perf_counter()
        _, ok = initialize_domains(self.graph, self.constraints, self.objective, self.store,
                                   singleton=self.singleton)
        if ok and self.use_propagation:
            self.stats.propagations += 1
            ok = propagate(self.store, self.constraints, self.graph, self, self.trace)
            self.prop_epoch = self.epoch
        if not ok:
            self.exhausted = True
            self.stats.elapsed = time.perf_counter() - t0
            return self.incumbent
        stack: list[_Frame] = []
        first = self._next_node_frame()
        if first is _COMPLETE:
            self._on_solution()
            self.exhausted = True
        else:
            stack.append(first)
        while stack:
            if self._out_of_budget(t0):
                self.timed_out = True
                break
            f = stack[-1]
            if f.idx >= len(f.options):
                stack.pop()
                self._undo_to(f.trail, f.journal)
                self.stats.backtracks += 1
                self._note("Collapse" if f.kind == "LogicFlow" else "NodeFail", f.node)
                continue
            self._undo_to(f.trail, f.journal)
            opt = f.options[f.idx]
            f.idx += 1
            self.store.decision = len(stack)
            self.stats.decisions += 1
            nxt = self._apply(f, opt)
            if nxt is None:
                continue
            if nxt is _COMPLETE:
                if self._on_solution():
                    break
                continue
            stack.append(nxt)
        else:
            self.exhausted = True
        if stack:
            self._undo_to(stack[0].trail, stack[0].journal)
        self.stats.elapsed = time.perf_counter() - t0
        if self.incumbent is not None:
            self.incumbent.stats = self.stats
            self.incumbent.timed_out = self.timed_out
            self.incumbent.optimal = self.exhausted and self.objective != "none" and not self.find_all
        return self.incumbent


# -- front doors ------------------------------------------------------------------

def run_strategy(name: str, graph: CallGraph, constraints: ConstraintSet, objective: str = "none",
                 seed: int = 0, budget: Budget | None = None) -> Solution | None:
    """One forced pass; ``None`` when the strategy violates a constraint."""
    eng = Engine(graph, constraints, objective, make_policy(name, seed), budget, use_propagation=False)
    eng.objective = "none"  # a single pass: stop at the first solution
    sol = eng.run()
    if sol is not None:
        sol.optimal = False
        sol.strategy = name
    return sol


def solve(graph: CallGraph, constraints: ConstraintSet | None = None, objective: str = "none",
          strategies=None, budget: Budget | None = None, seed: int = 0, trace=None,
          use_propagation: bool = True) -> Solution:
    """Warm-start strategies, then exhaustive branch and bound.

    Raises :class:`Infeasible` when the search space holds no solution and
    :class:`SearchTimeout` when the budget expires without one.
    """
    constraints = constraints or ConstraintSet()
    budget = budget or Budget()
    t0 = time.perf_counter()
    stats = SearchStats()
    if strategies is None:
        strategies = select_strategies(constraints, objective)
    incumbent = None
    for name in strategies:
        sol = run_strategy(name, graph, constraints, objective, seed, Budget(budget.timeout, budget.max_decisions))
        if sol is None:
            continue
        stats.merge(sol.stats)
        if not satisfies(sol.metrics, constraints):
            continue
        if incumbent is None or (objective != "none" and sol.value(objective) < incumbent.value(objective)):
            incumbent = sol
        if objective == "none":
            break
    if incumbent is not None and objective == "none":
        incumbent.stats = stats
        return incumbent
    bounded = constraints
    if incumbent is not None and incumbent.value(objective) <= 0:
        incumbent.optimal = True
        incumbent.stats = stats
        return incumbent
    if incumbent is not None:
        bounded = branch_and_bound_step(constraints, incumbent.value(objective), objective)
    remaining = None
    if budget.timeout is not None:
        remaining = max(budget.timeout - (time.perf_counter() - t0), 1e-3)
    singleton = objective != "none" and constraints.empty
    eng = Engine(graph, bounded, objective, Policy(), Budget(remaining, budget.max_decisions),
                 use_propagation=use_propagation, trace=trace, singleton=singleton)
    best = eng.run()
    stats.merge(eng.stats)
    if best is None:
        best = incumbent
    if best is None:
        if eng.timed_out:
            raise SearchTimeout("budget exhausted before any solution was found")
        raise Infeasible("no implementation choice satisfies the constraints")
    best.optimal = eng.exhausted and objective != "none"
    best.timed_out = eng.timed_out
    best.stats = stats
    return best


def find_all(graph: CallGraph, constraints: ConstraintSet | None = None, budget: Budget | None = None,
             log_decisions: bool = False) -> Engine:
    """Enumerate complete solutions (no bound); returns the finished engine."""
    eng = Engine(graph, constraints or ConstraintSet(), "none", Policy(), budget, find_all=True,
                 log_decisions=log_decisions)
    eng.run()
    return eng
