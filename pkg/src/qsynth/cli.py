"""``qsynth`` command line: synth, verify, bench and profile-dump.

Exit codes: 0 success, 1 infeasible (or a failed equivalence check),
2 invalid input, 3 timeout before any solution was found.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from . import stdlib
from .benchmarks import SweepSpec, rows_to_csv, run_baseline, run_sweep
from .callgraph import lower_to_graph, reduce_graph
from .circuit import QasmError, measure, parse_qasm, to_qasm
from .domains import OBJECTIVES, ConstraintSet
from .model import ModelError, load_model
from .reference import ReferenceError, verify_circuit
from .simulator import SimulationError
from .solver import DEFAULT_TIMEOUT, STRATEGIES, Budget, Infeasible, SearchTimeout
from .synthesis import synthesize

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_TIMEOUT = 0, 1, 2, 3

_OPT_ALIASES = {"min-cx": "cx", "min-width": "width", "min-depth": "depth"}


class UsageError(ValueError):
    pass


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_range(text: str) -> list[int]:
    """``"4..12"`` (inclusive), ``"4..12..2"`` or ``"4,8,16"``."""
    try:
        if ".." in text:
            parts = [int(p) for p in text.split("..")]
            if len(parts) not in (2, 3):
                raise ValueError
            step = parts[2] if len(parts) == 3 else 1
            if step <= 0:
                raise ValueError
            return list(range(parts[0], parts[1] + 1, step))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad N range {text!r}") from None


def _objective(text: str) -> str:
    obj = _OPT_ALIASES.get(text, text)
    if obj not in OBJECTIVES:
        raise argparse.ArgumentTypeError(f"objective must be one of {', '.join(OBJECTIVES)}")
    return obj


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QSYNTH_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QSYNTH_SEED must be an integer, got {env!r}") from None


def _add_search_flags(p, width_list: bool = False):
    if width_list:
        p.add_argument("--max-width", default=None, help="comma-separated widths, one sweep row each")
    else:
        p.add_argument("--max-width", type=int)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--max-cx", type=int)
    p.add_argument("--opt", type=_objective, default="none", help="objective: none, width, depth, cx, single")
    p.add_argument("--seed", type=int, default=None, help="seed (falls back to $QSYNTH_SEED, then 0)")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds (default 1000)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsynth", description="Resource-aware quantum circuit synthesis.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="synthesize a model into OpenQASM")
    s.add_argument("model", help="model file (JSON)")
    _add_search_flags(s)
    s.add_argument("--strategy", action="append", choices=STRATEGIES,
                   help="warm-start strategy (repeatable); default chosen from constraints")
    s.add_argument("-o", "--output", help="QASM output path (default: stdout)")
    s.add_argument("--report", help="JSON report path")
    s.add_argument("--dump-graph", help="write the call graph as Graphviz dot")
    s.add_argument("--no-reducer", action="store_true", help="skip symmetry-breaking edges")
    s.add_argument("--trace-propagation", action="store_true", help="log every pruned tuple to stderr")

    v = sub.add_parser("verify", help="check a synthesized circuit against the model's reference semantics")
    v.add_argument("model")
    _add_search_flags(v)
    v.add_argument("--qasm", help="verify this QASM file instead of synthesizing")
    v.add_argument("--atol", type=float, default=1e-9)
    v.add_argument("--report", help="JSON verification report path")

    b = sub.add_parser("bench", help="run a benchmark sweep and write CSV")
    b.add_argument("--family", choices=("walk", "qsvt"), required=True)
    b.add_argument("--n", required=True, help='N values, e.g. "4..12" or "4,8,16"')
    _add_search_flags(b, width_list=True)
    b.add_argument("--degree", type=int, default=3, help="QSVT polynomial degree (odd)")
    b.add_argument("--baseline", action="store_true", help="pin every call to its zero-aux implementation")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--csv", help="CSV output path (default: stdout)")

    d = sub.add_parser("profile-dump", help="print implementation resource profiles as JSON")
    d.add_argument("model", nargs="?", help="dump the domains of this model's call graph instead")
    d.add_argument("--max-ctrl", type=int, default=8)
    d.add_argument("--max-size", type=int, default=8)
    d.add_argument("--format", choices=("csv", "json"), default="csv")
    d.add_argument("-o", "--output")
    return ap


def _constraints(args) -> ConstraintSet:
    return ConstraintSet.make(max_width=args.max_width, max_depth=args.max_depth, max_cx=args.max_cx)


def _emit(text: str, path) -> None:
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


def _synth(args) -> int:
    model = load_model(args.model)
    trace = None
    if args.trace_propagation:
        def trace(node, row, reason):
            print(f"prune node={node} variant={row.variant} reason={reason}", file=sys.stderr)
    result = synthesize(model, _constraints(args), args.opt, args.strategy, Budget(args.timeout),
                        _seed(args), reducer=not args.no_reducer, trace=trace)
    if args.dump_graph:
        write_atomic(args.dump_graph, result.graph.to_dot())
    qasm = to_qasm(result.circuit)
    if args.report:
        report = result.solution.report()
        report["model"] = Path(args.model).name
        report["constraints"] = {"max_width": args.max_width, "max_depth": args.max_depth, "max_cx": args.max_cx}
        report["objective"] = args.opt
        write_atomic(args.report, json.dumps(report, indent=2, sort_keys=True) + "\n")
    _emit(qasm, args.output)
    if result.solution.timed_out:
        print("qsynth: timeout; returning best solution found", file=sys.stderr)
    return EXIT_OK


def _verify(args) -> int:
    model = load_model(args.model)
    if args.qasm:
        circuit = parse_qasm(Path(args.qasm).read_text())
    else:
        circuit = synthesize(model, _constraints(args), args.opt, None, Budget(args.timeout), _seed(args)).circuit
    rep = dict(verify_circuit(model, circuit, args.atol))
    rep["metrics"] = measure(circuit).as_dict()
    text = json.dumps(rep, indent=2, sort_keys=True) + "\n"
    if args.report:
        write_atomic(args.report, text)
    else:
        sys.stdout.write(text)
    print(f"verify: {'PASS' if rep['passed'] else 'FAIL'} (max error {rep['max_error']:.2e})", file=sys.stderr)
    return EXIT_OK if rep["passed"] else EXIT_INFEASIBLE


def _bench(args) -> int:
    ns = parse_range(args.n)
    if not ns:
        raise UsageError("empty N range")
    widths = [None] if args.max_width is None else parse_range(args.max_width)
    objective = "cx" if args.opt == "none" else args.opt
    if args.baseline:
        rows = []
        for w in widths:
            spec = SweepSpec(args.family, ns, [w], objective, args.timeout, _seed(args), args.degree)
            rows.extend(run_baseline(args.family, ns, objective, args.timeout, spec.seed, max_width=w,
                                     degree=args.degree))
    else:
        spec = SweepSpec(args.family, ns, widths, objective, args.timeout, _seed(args), args.degree)
        rows = run_sweep(spec, jobs=max(1, args.jobs))
    _emit(rows_to_csv(rows), args.csv)
    return EXIT_OK


def _profile_dump(args) -> int:
    if args.model:
        graph = reduce_graph(lower_to_graph(load_model(args.model)))
        data = [{"node": n, "label": graph.nodes[n].label, "kind": graph.nodes[n].kind, "variant": r.variant,
                 "aux": r.aux, "depth": r.depth, "cx": r.cx, "single": r.count("single")}
                for n in graph.order for r in graph.nodes[n].options]
    else:
        data = stdlib.profile_table(args.max_ctrl, args.max_size)
    if args.format == "json":
        text = json.dumps(data, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(data[0]) if data else [], lineterminator="\n")
        writer.writeheader()
        writer.writerows(data)
        text = buf.getvalue()
    _emit(text, args.output)
    return EXIT_OK


_COMMANDS = {"synth": _synth, "verify": _verify, "bench": _bench, "profile-dump": _profile_dump}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2 already
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except Infeasible as exc:
        print(f"qsynth: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SearchTimeout as exc:
        print(f"qsynth: timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except (ModelError, UsageError, QasmError, ReferenceError, SimulationError, ValueError, OSError) as exc:
        print(f"qsynth: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
