"""High-level program model ("variable semantics") and its JSON text format.

A model is a set of quantum functions, an entry function and the entry's
quantum variables.  Function bodies are statements: calls, primitive gates,
``control``, ``invert``, ``repeat``, ``within``/``apply``, ``select`` among
alternative bodies, and ``allocate``/``free`` of local scratch registers.

Widths and repeat counts are integer expressions over loop indices,
classical parameters and ``len(x)`` (also ``x.len`` / ``x.size``).
"""

from __future__ import annotations

import ast
import json
import math
import operator
import re
from dataclasses import dataclass, field
from typing import Union

from . import stdlib

QUANTUM_KINDS = ("qubit", "qubit-array", "qnum")
CLASSICAL_KINDS = ("real", "int")


class ModelError(ValueError):
    """Raised for malformed or inconsistent models."""

    def __init__(self, message: str, where: str | None = None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


# -- expressions ----------------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.FloorDiv: operator.floordiv, ast.Mod: operator.mod,
    ast.Pow: operator.pow,
}
_FUNCS = {"sin": math.sin, "cos": math.cos, "sqrt": math.sqrt, "abs": abs, "min": min, "max": max}


def evaluate(expr, env: dict, widths: dict | None = None):
    """Evaluate a width/angle expression; numbers pass through unchanged."""
    if isinstance(expr, (int, float)) and not isinstance(expr, bool):
        return expr
    if not isinstance(expr, str):
        raise ModelError(f"expected expression, got {expr!r}")
    text = re.sub(r"\b([A-Za-z_]\w*)\.(len|size)\b", r"len(\1)", expr)
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ModelError(f"syntax error in expression {expr!r} at column {exc.offset}") from None
    widths = widths or {}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id == "pi":
                return math.pi
            raise ModelError(f"unresolved name {node.id!r} in {expr!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            if node.func.id == "len" and len(node.args) == 1 and isinstance(node.args[0], ast.Name):
                name = node.args[0].id
                if name not in widths:
                    raise ModelError(f"unresolved quantum name {name!r} in {expr!r}")
                return widths[name]
            if node.func.id in _FUNCS:
                return _FUNCS[node.func.id](*[ev(a) for a in node.args])
        raise ModelError(f"unsupported construct in expression {expr!r}")

    return ev(tree)


def evaluate_int(expr, env, widths=None) -> int:
    v = evaluate(expr, env, widths)
    if isinstance(v, float):
        if not v.is_integer():
            raise ModelError(f"expression {expr!r} must be an integer, got {v}")
        v = int(v)
    return v


# -- operands -------------------------------------------------------------------

@dataclass(frozen=True)
class Slice:
    """``var``, ``var[i]`` or ``var[lo:hi]``; bounds are expressions."""

    var: str
    lo: object = None
    hi: object = None
    single: bool = False

    def text(self) -> str:
        if self.single:
            return f"{self.var}[{self.lo}]"
        if self.lo is None and self.hi is None:
            return self.var
        lo = "" if self.lo is None else self.lo
        hi = "" if self.hi is None else self.hi
        return f"{self.var}[{lo}:{hi}]"


@dataclass(frozen=True)
class Operand:
    """Concatenation of slices, low bits first."""

    parts: tuple[Slice, ...]
    role: str = "functional"

    def to_json(self):
        if len(self.parts) == 1:
            return self.parts[0].text()
        return [p.text() for p in self.parts]

    def names(self):
        return {p.var for p in self.parts}


_SLICE = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\[(.*)\])?\s*$")


def _parse_slice(text: str) -> Slice:
    m = _SLICE.match(text)
    if not m:
        raise ModelError(f"cannot parse operand {text!r}")
    var, inner = m.groups()
    if inner is None:
        return Slice(var)
    if ":" in inner:
        lo, hi = inner.split(":", 1)
        return Slice(var, lo.strip() or None, hi.strip() or None)
    if not inner.strip():
        raise ModelError(f"empty index in operand {text!r}")
    return Slice(var, inner.strip(), None, single=True)


def _num_or_expr(text):
    if text is None:
        return None
    try:
        return int(text)
    except (TypeError, ValueError):
        return text


def parse_operand(value) -> Operand:
    items = [value] if isinstance(value, str) else list(value)
    if not items:
        raise ModelError("empty operand")
    parts = []
    for item in items:
        if not isinstance(item, str):
            raise ModelError(f"operand must be a string, got {item!r}")
        s = _parse_slice(item)
        parts.append(Slice(s.var, _num_or_expr(s.lo), _num_or_expr(s.hi), s.single))
    return Operand(tuple(parts))


# -- statements -----------------------------------------------------------------

@dataclass(frozen=True)
class Call:
    function: str
    args: tuple


@dataclass(frozen=True)
class PrimitiveGate:
    gate: str
    qubits: tuple[Operand, ...]
    angle: object = None


@dataclass(frozen=True)
class Control:
    operand: Operand
    value: object
    body: tuple


@dataclass(frozen=True)
class Invert:
    body: tuple


@dataclass(frozen=True)
class Repeat:
    count: object
    index: str | None
    body: tuple


@dataclass(frozen=True)
class Select:
    alternatives: tuple


@dataclass(frozen=True)
class Within:
    compute: tuple
    action: tuple


@dataclass(frozen=True)
class Allocate:
    var: str
    width: object


@dataclass(frozen=True)
class Free:
    var: str


Statement = Union[Call, PrimitiveGate, Control, Invert, Repeat, Select, Within, Allocate, Free]


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    width: object = None

    @property
    def quantum(self) -> bool:
        return self.kind in QUANTUM_KINDS


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[Param, ...]
    body: tuple


@dataclass
class Model:
    functions: dict[str, FunctionDef]
    entry: str
    variables: dict[str, int] = field(default_factory=dict)

    @property
    def num_functional(self) -> int:
        return sum(self.variables.values())

    def layout(self) -> dict[tuple[str, int], int]:
        """Physical index of each bit of the entry variables."""
        out, k = {}, 0
        for name, width in self.variables.items():
            for i in range(width):
                out[(name, i)] = k
                k += 1
        return out


# -- parsing --------------------------------------------------------------------

_DISCRIMINATORS = ("call", "gate", "control", "invert", "repeat", "select", "within", "allocate", "free")


def _signature(name: str, functions: dict) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if name in functions:
        f = functions[name]
        params = f.params if isinstance(f, FunctionDef) else f["params"]
        return tuple(p.kind for p in params), tuple(p.name for p in params)
    if stdlib.is_library_function(name):
        qkinds, cnames = stdlib.SIGNATURES[name]
        return qkinds + ("real",) * len(cnames), tuple(f"q{i}" for i in range(len(qkinds))) + cnames
    raise ModelError(f"unresolved function {name!r}")


def _parse_param(raw, where) -> Param:
    if isinstance(raw, str):
        name, _, kind = raw.partition(":")
        raw = {"name": name.strip(), "kind": kind.strip() or "qubit-array"}
    kind = raw.get("kind", "qubit-array")
    if kind not in QUANTUM_KINDS + CLASSICAL_KINDS:
        raise ModelError(f"unknown parameter kind {kind!r}", where)
    width = raw.get("width")
    if kind == "qubit":
        width = 1
    return Param(raw["name"], kind, width)


def _parse_body(items, functions, where) -> tuple:
    if not isinstance(items, list):
        raise ModelError("statement body must be a list", where)
    return tuple(_parse_statement(s, functions, f"{where}[{i}]") for i, s in enumerate(items))


def _parse_statement(raw, functions, where):
    if not isinstance(raw, dict):
        raise ModelError(f"statement must be an object, got {raw!r}", where)
    keys = [k for k in _DISCRIMINATORS if k in raw]
    if len(keys) != 1:
        raise ModelError(f"statement needs exactly one of {_DISCRIMINATORS}", where)
    kind = keys[0]
    if kind == "call":
        name = raw["call"]
        try:
            kinds, _ = _signature(name, functions)
        except ModelError:
            kinds = ()  # reported by validate()
        args = raw.get("args", [])
        if not isinstance(args, list):
            raise ModelError("call arguments must be a list", where)
        # arity is reported by validate(); surplus arguments are kept as written
        parsed = tuple(parse_operand(a) if k in QUANTUM_KINDS else a
                       for a, k in zip(args, kinds + ("?",) * (len(args) - len(kinds))))
        return Call(name, parsed)
    if kind == "gate":
        gate = raw["gate"].upper()
        if gate not in stdlib.PRIMITIVE_GATES:
            raise ModelError(f"unknown primitive gate {raw['gate']!r}", where)
        qubits = tuple(parse_operand(q) for q in raw.get("qubits", []))
        return PrimitiveGate(gate, qubits, raw.get("angle"))
    if kind == "control":
        return Control(parse_operand(raw["control"]), raw.get("equals"),
                       _parse_body(raw.get("body", []), functions, where + ".body"))
    if kind == "invert":
        return Invert(_parse_body(raw["invert"], functions, where + ".invert"))
    if kind == "repeat":
        return Repeat(raw["repeat"], raw.get("index"),
                      _parse_body(raw.get("body", []), functions, where + ".body"))
    if kind == "select":
        alts = raw["select"]
        if not isinstance(alts, list) or not alts:
            raise ModelError("select needs at least one alternative", where)
        return Select(tuple(_parse_body(a, functions, f"{where}.select{j}") for j, a in enumerate(alts)))
    if kind == "within":
        return Within(_parse_body(raw["within"], functions, where + ".within"),
                      _parse_body(raw.get("apply", []), functions, where + ".apply"))
    if kind == "allocate":
        return Allocate(raw["allocate"], raw.get("width", 1))
    return Free(raw["free"])


def model_from_dict(doc: dict) -> Model:
    if not isinstance(doc, dict):
        raise ModelError("model document must be an object")
    for key in ("functions", "entry"):
        if key not in doc:
            raise ModelError(f"missing top-level key {key!r}")
    raw_functions = doc["functions"]
    headers = {}
    for name, fdef in raw_functions.items():
        params = tuple(_parse_param(p, name) for p in fdef.get("params", []))
        headers[name] = {"params": params}
    functions = {}
    for name, fdef in raw_functions.items():
        body = _parse_body(fdef.get("body", []), headers, name)
        functions[name] = FunctionDef(name, headers[name]["params"], body)
    variables = {}
    for var, width in doc.get("variables", {}).items():
        if not isinstance(width, int) or width < 1:
            raise ModelError(f"variable {var!r} needs a positive integer width")
        variables[var] = width
    return Model(functions, doc["entry"], variables)


def parse_model(text: str) -> Model:
    """Parse model text (JSON) and check it; raises ``ModelError``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    model = model_from_dict(doc)
    problems = validate(model)
    if problems:
        raise ModelError(problems[0].message, problems[0].where)
    return model


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


# -- serialization --------------------------------------------------------------

def _stmt_to_json(s):
    if isinstance(s, Call):
        return {"call": s.function, "args": [a.to_json() if isinstance(a, Operand) else a for a in s.args]}
    if isinstance(s, PrimitiveGate):
        out = {"gate": s.gate, "qubits": [q.to_json() for q in s.qubits]}
        if s.angle is not None:
            out["angle"] = s.angle
        return out
    if isinstance(s, Control):
        out = {"control": s.operand.to_json(), "body": [_stmt_to_json(b) for b in s.body]}
        if s.value is not None:
            out["equals"] = s.value
        return out
    if isinstance(s, Invert):
        return {"invert": [_stmt_to_json(b) for b in s.body]}
    if isinstance(s, Repeat):
        out = {"repeat": s.count, "body": [_stmt_to_json(b) for b in s.body]}
        if s.index is not None:
            out["index"] = s.index
        return out
    if isinstance(s, Select):
        return {"select": [[_stmt_to_json(b) for b in alt] for alt in s.alternatives]}
    if isinstance(s, Within):
        return {"within": [_stmt_to_json(b) for b in s.compute], "apply": [_stmt_to_json(b) for b in s.action]}
    if isinstance(s, Allocate):
        return {"allocate": s.var, "width": s.width}
    return {"free": s.var}


def model_to_dict(model: Model) -> dict:
    functions = {}
    for name, f in model.functions.items():
        params = []
        for p in f.params:
            entry = {"name": p.name, "kind": p.kind}
            if p.width is not None and p.kind != "qubit":
                entry["width"] = p.width
            params.append(entry)
        functions[name] = {"params": params, "body": [_stmt_to_json(s) for s in f.body]}
    return {"entry": model.entry, "variables": dict(model.variables), "functions": functions}


def serialize(model: Model) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


# -- validation -----------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    where: str | None = None

    def __str__(self):
        return f"{self.where}: {self.message}" if self.where else self.message


def _walk(body):
    for s in body:
        yield s
        if isinstance(s, (Control, Invert, Repeat)):
            yield from _walk(s.body)
        elif isinstance(s, Within):
            yield from _walk(s.compute)
            yield from _walk(s.action)
        elif isinstance(s, Select):
            for alt in s.alternatives:
                yield from _walk(alt)


def _find_cycle(model: Model) -> list[str] | None:
    graph = {
        name: sorted({s.function for s in _walk(f.body) if isinstance(s, Call) and s.function in model.functions})
        for name, f in model.functions.items()
    }
    state: dict[str, int] = {}
    stack: list[str] = []

    def dfs(u):
        state[u] = 1
        stack.append(u)
        for v in graph[u]:
            if state.get(v) == 1:
                return stack[stack.index(v):] + [v]
            if v not in state:
                cyc = dfs(v)
                if cyc:
                    return cyc
        stack.pop()
        state[u] = 2
        return None

    for name in graph:
        if name not in state:
            cyc = dfs(name)
            if cyc:
                return cyc
    return None


def validate(model: Model) -> list[Diagnostic]:
    """One diagnostic per violated invariant; empty when the model is sound."""
    out: list[Diagnostic] = []
    if model.entry not in model.functions:
        return [Diagnostic("entry", f"entry function {model.entry!r} is not defined")]
    if any(p.quantum for p in model.functions[model.entry].params):
        out.append(Diagnostic("entry", "entry function must not take quantum parameters", model.entry))
    for name, f in model.functions.items():
        seen = set()
        for p in f.params:
            if p.name in seen:
                out.append(Diagnostic("param", f"duplicate parameter {p.name!r}", name))
            seen.add(p.name)
        for s in _walk(f.body):
            if isinstance(s, Call):
                if s.function not in model.functions and not stdlib.is_library_function(s.function):
                    out.append(Diagnostic("unresolved", f"unresolved function {s.function!r}", name))
                    continue
                kinds, _ = _signature(s.function, model.functions)
                if len(s.args) != len(kinds):
                    out.append(Diagnostic("arity", f"{s.function} takes {len(kinds)} arguments, got {len(s.args)}", name))
            elif isinstance(s, Select) and not s.alternatives:
                out.append(Diagnostic("select", "select needs at least one alternative", name))
    cycle = _find_cycle(model)
    if cycle:
        out.append(Diagnostic("recursion", "recursive definition: " + " -> ".join(cycle), cycle[0]))
    if out:
        return out
    from .lowering import lower_model

    try:
        lower_model(model)
    except ModelError as exc:
        out.append(Diagnostic("elaboration", str(exc)))
    return out


def structurally_equal(a: Model, b: Model) -> bool:
    return model_to_dict(a) == model_to_dict(b)


def inline_composites(model: Model, choices: dict | None = None) -> Model:
    """Inline every user function into the entry, resolving each ``select``.

    ``choices`` maps select call-site paths (as reported by
    :func:`qsynth.lowering.select_sites`) to alternative indices.  Repeats are
    unrolled and operands become concrete bit references.
    """
    from .lowering import elaborate, tree_to_statements

    tree = elaborate(model, choices=choices or {})
    body = tree_to_statements(tree, model)
    main = FunctionDef(model.entry, (), tuple(body))
    return Model({model.entry: main}, model.entry, dict(model.variables))
