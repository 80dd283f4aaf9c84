"""Elaboration of a model into concrete bit references and flat call operations.

Two passes:

``elaborate``
    inlines user functions, unrolls repeats, evaluates every expression and
    resolves operands to ``(variable, bit)`` references.  ``select``
    statements are kept with all alternatives (``choices="all"``) or resolved
    through a site → alternative map.
``lower``
    pushes ``control``/``invert``/``within`` down to library calls, producing
    the flat op list the call graph is built from.

``control(c == k)`` wraps the body in ``X`` gates on the zero bits of ``k``;
the X gates themselves stay uncontrolled (they cancel when the outer controls
are off).  Under ``within``/``apply`` only the action is controlled.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import stdlib
from .model import (
    Allocate,
    Call,
    Control,
    Free,
    FunctionDef,
    Invert,
    Model,
    ModelError,
    Operand,
    PrimitiveGate,
    Repeat,
    Select,
    Slice,
    Within,
    evaluate,
    evaluate_int,
)

QRef = tuple  # (variable, bit)

_GATE_ARITY = {"H": 1, "X": 1, "RZ": 1, "CX": 2, "CPHASE": 2}
_ANGLED = {"RZ", "CPHASE"}


# -- concrete tree ----------------------------------------------------------------

@dataclass(frozen=True)
class LibCall:
    function: str
    args: tuple  # tuple of tuples of QRef
    consts: tuple = ()  # sorted (name, value) pairs
    primitive: bool = False


@dataclass(frozen=True)
class CControl:
    ctrl: tuple
    value: int
    body: tuple


@dataclass(frozen=True)
class CInvert:
    body: tuple


@dataclass(frozen=True)
class CWithin:
    compute: tuple
    action: tuple


@dataclass(frozen=True)
class CSelect:
    site: str
    alternatives: tuple


@dataclass(frozen=True)
class CAlloc:
    var: str
    qubits: tuple


@dataclass(frozen=True)
class CFree:
    var: str
    qubits: tuple


_FREED = object()


class _Elaborator:
    def __init__(self, model: Model, choices):
        self.model = model
        self.choices = choices
        self.counter = itertools.count()
        self.sites: list[str] = []

    # operands -------------------------------------------------------------

    def resolve(self, operand: Operand, qenv, env, where) -> tuple:
        widths = {k: len(v) for k, v in qenv.items() if v is not _FREED}
        bits: list = []
        for part in operand.parts:
            if part.var not in qenv:
                raise ModelError(f"unresolved name {part.var!r}", where)
            reg = qenv[part.var]
            if reg is _FREED:
                raise ModelError(f"use of freed variable {part.var!r}", where)
            n = len(reg)
            if part.single:
                i = evaluate_int(part.lo, env, widths)
                if not 0 <= i < n:
                    raise ModelError(f"index {i} out of range for {part.var!r} of width {n}", where)
                bits.append(reg[i])
                continue
            lo = 0 if part.lo is None else evaluate_int(part.lo, env, widths)
            hi = n if part.hi is None else evaluate_int(part.hi, env, widths)
            if lo >= hi:
                raise ModelError(f"empty slice {part.text()}", where)
            if lo < 0 or hi > n:
                raise ModelError(f"slice {part.text()} = [{lo}:{hi}] out of range for width {n}", where)
            bits.extend(reg[lo:hi])
        if len(set(bits)) != len(bits):
            raise ModelError("operand repeats a qubit", where)
        return tuple(bits)

    # bodies ---------------------------------------------------------------

    def function(self, fdef: FunctionDef, qenv, env, prefix, stack) -> list:
        if fdef.name in stack:
            raise ModelError(f"recursive definition of {fdef.name!r}")
        stack = stack + (fdef.name,)
        return self.body(fdef.body, dict(qenv), dict(env), prefix, stack)

    def body(self, stmts, qenv, env, prefix, stack) -> list:
        out: list = []
        local: dict[str, str] = {}
        for i, s in enumerate(stmts):
            path = f"{prefix}.{i}"
            out.extend(self.statement(s, qenv, env, path, stack, local))
        leftover = [v for v in local if qenv.get(v) is not _FREED]
        if leftover:
            raise ModelError(f"local variable {leftover[0]!r} is allocated but never freed", prefix)
        return out

    def statement(self, s, qenv, env, path, stack, local) -> list:
        widths = {k: len(v) for k, v in qenv.items() if v is not _FREED}
        if isinstance(s, PrimitiveGate):
            arity = _GATE_ARITY[s.gate]
            if len(s.qubits) != arity:
                raise ModelError(f"{s.gate} takes {arity} qubit operands, got {len(s.qubits)}", path)
            args = tuple(self.resolve(q, qenv, env, path) for q in s.qubits)
            if any(len(a) != 1 for a in args):
                raise ModelError(f"{s.gate} operands must be single qubits", path)
            _check_disjoint(args, path)
            consts = ()
            if s.gate in _ANGLED:
                if s.angle is None:
                    raise ModelError(f"{s.gate} needs an angle", path)
                consts = (("angle", float(evaluate(s.angle, env, widths))),)
            return [LibCall(stdlib.PRIMITIVE_GATES[s.gate], args, consts, primitive=True)]
        if isinstance(s, Call):
            return self.call(s, qenv, env, path, stack)
        if isinstance(s, Control):
            ctrl = self.resolve(s.operand, qenv, env, path)
            if s.value is None:
                value = (1 << len(ctrl)) - 1
            else:
                value = evaluate_int(s.value, env, widths)
            if not 0 <= value < (1 << len(ctrl)):
                raise ModelError(f"control value {value} does not fit {len(ctrl)} qubits", path)
            body = self.body(s.body, qenv, env, path + "c", stack)
            touched = _touched(body)
            if touched & set(ctrl):
                raise ModelError("control qubit is also acted on inside the controlled body", path)
            return [CControl(ctrl, value, tuple(body))]
        if isinstance(s, Invert):
            return [CInvert(tuple(self.body(s.body, qenv, env, path + "i", stack)))]
        if isinstance(s, Within):
            return [CWithin(tuple(self.body(s.compute, qenv, env, path + "w", stack)),
                            tuple(self.body(s.action, qenv, env, path + "a", stack)))]
        if isinstance(s, Repeat):
            count = evaluate_int(s.count, env, widths)
            if count < 0:
                raise ModelError(f"negative repeat count {count}", path)
            out = []
            for it in range(count):
                inner = dict(env)
                if s.index:
                    inner[s.index] = it
                out.extend(self.body(s.body, qenv, inner, f"{path}r{it}", stack))
            return out
        if isinstance(s, Select):
            self.sites.append(path)
            if self.choices == "all":
                alts = tuple(tuple(self.body(a, qenv, env, f"{path}s{k}", stack))
                             for k, a in enumerate(s.alternatives))
                return [CSelect(path, alts)]
            if path not in self.choices:
                raise ModelError(f"missing choice for select at {path}")
            k = self.choices[path]
            if not 0 <= k < len(s.alternatives):
                raise ModelError(f"choice {k} out of range for select at {path}")
            return self.body(s.alternatives[k], qenv, env, f"{path}s{k}", stack)
        if isinstance(s, Allocate):
            if s.var in qenv and qenv[s.var] is not _FREED:
                raise ModelError(f"variable {s.var!r} already exists", path)
            width = evaluate_int(s.width, env, widths)
            if width < 1:
                raise ModelError(f"allocation of {s.var!r} needs a positive width", path)
            name = f"{s.var}__{next(self.counter)}"
            bits = tuple((name, i) for i in range(width))
            qenv[s.var] = bits
            local[s.var] = name
            return [CAlloc(name, bits)]
        if isinstance(s, Free):
            if s.var not in local:
                raise ModelError(f"free of {s.var!r} which is not allocated in this body", path)
            bits = qenv[s.var]
            if bits is _FREED:
                raise ModelError(f"use of freed variable {s.var!r}", path)
            qenv[s.var] = _FREED
            return [CFree(local[s.var], bits)]
        raise ModelError(f"unknown statement {s!r}", path)

    def call(self, s: Call, qenv, env, path, stack) -> list:
        widths = {k: len(v) for k, v in qenv.items() if v is not _FREED}
        if s.function in self.model.functions:
            fdef = self.model.functions[s.function]
            if len(s.args) != len(fdef.params):
                raise ModelError(f"{s.function} takes {len(fdef.params)} arguments, got {len(s.args)}", path)
            inner_q, inner_env = {}, {}
            for p, a in zip(fdef.params, s.args):
                if p.quantum:
                    if not isinstance(a, Operand):
                        raise ModelError(f"argument {p.name!r} of {s.function} must be a quantum operand", path)
                    bits = self.resolve(a, qenv, env, path)
                    if p.width is not None:
                        want = evaluate_int(p.width, inner_env, {k: len(v) for k, v in inner_q.items()})
                        if want != len(bits):
                            raise ModelError(
                                f"width mismatch for {p.name!r} of {s.function}: expected {want}, got {len(bits)}",
                                path)
                    inner_q[p.name] = bits
                else:
                    value = evaluate(a, env, widths)
                    inner_env[p.name] = int(value) if p.kind == "int" else value
            _check_disjoint(tuple(inner_q.values()), path)
            return self.function(fdef, inner_q, inner_env, f"{path}/{s.function}", stack)
        if not stdlib.is_library_function(s.function):
            raise ModelError(f"unresolved function {s.function!r}", path)
        qkinds, cnames = stdlib.SIGNATURES[s.function]
        if len(s.args) != len(qkinds) + len(cnames):
            raise ModelError(f"{s.function} takes {len(qkinds) + len(cnames)} arguments, got {len(s.args)}", path)
        args = tuple(self.resolve(a, qenv, env, path) for a in s.args[:len(qkinds)])
        for kind, a in zip(qkinds, args):
            if kind == "qubit" and len(a) != 1:
                raise ModelError(f"{s.function} expects a single qubit, got {len(a)}", path)
        _check_disjoint(args, path)
        consts = []
        for name, raw in zip(cnames, s.args[len(qkinds):]):
            value = evaluate(raw, env, widths)
            if s.function == "add_const":
                if isinstance(value, float) and not value.is_integer():
                    raise ModelError("add_const needs an integer value", path)
                value = int(value)
            else:
                value = float(value)
            consts.append((name, value))
        return [LibCall(s.function, args, tuple(consts))]


def _check_disjoint(args, where):
    seen = set()
    for a in args:
        for q in a:
            if q in seen:
                raise ModelError("operands overlap", where)
            seen.add(q)


def _touched(body) -> set:
    out = set()
    for s in body:
        if isinstance(s, LibCall):
            for a in s.args:
                out.update(a)
        elif isinstance(s, CControl):
            out.update(s.ctrl)
            out |= _touched(s.body)
        elif isinstance(s, CInvert):
            out |= _touched(s.body)
        elif isinstance(s, CWithin):
            out |= _touched(s.compute) | _touched(s.action)
        elif isinstance(s, CSelect):
            for alt in s.alternatives:
                out |= _touched(alt)
        elif isinstance(s, (CAlloc, CFree)):
            out.update(s.qubits)
    return out


def elaborate(model: Model, choices="all") -> list:
    """Concrete statement tree of the entry function."""
    if model.entry not in model.functions:
        raise ModelError(f"entry function {model.entry!r} is not defined")
    entry = model.functions[model.entry]
    if entry.params:
        raise ModelError("entry function must not take parameters", model.entry)
    qenv = {name: tuple((name, i) for i in range(w)) for name, w in model.variables.items()}
    return _Elaborator(model, choices).function(entry, qenv, {}, model.entry, ())


def select_sites(model: Model) -> list[str]:
    """Paths of every reachable ``select`` (all alternatives explored), pre-order."""
    el = _Elaborator(model, "all")
    el.function(model.functions[model.entry],
                {n: tuple((n, i) for i in range(w)) for n, w in model.variables.items()}, {}, model.entry, ())
    return el.sites


# -- back to statements (inlining) ------------------------------------------------

def _operand_of(bits) -> Operand:
    parts = []
    i = 0
    while i < len(bits):
        var, lo = bits[i]
        j = i
        while j + 1 < len(bits) and bits[j + 1] == (var, bits[j][1] + 1):
            j += 1
        if j == i:
            parts.append(Slice(var, lo, None, single=True))
        else:
            parts.append(Slice(var, lo, bits[j][1] + 1))
        i = j + 1
    return Operand(tuple(parts))


_GATE_NAME = {v: k for k, v in stdlib.PRIMITIVE_GATES.items()}


def tree_to_statements(tree, model: Model) -> list:
    out = []
    for s in tree:
        if isinstance(s, LibCall):
            if s.primitive:
                angle = dict(s.consts).get("angle")
                out.append(PrimitiveGate(_GATE_NAME[s.function], tuple(_operand_of(a) for a in s.args), angle))
            else:
                out.append(Call(s.function, tuple(_operand_of(a) for a in s.args) + tuple(v for _, v in s.consts)))
        elif isinstance(s, CControl):
            out.append(Control(_operand_of(s.ctrl), s.value, tuple(tree_to_statements(s.body, model))))
        elif isinstance(s, CInvert):
            out.append(Invert(tuple(tree_to_statements(s.body, model))))
        elif isinstance(s, CWithin):
            out.append(Within(tuple(tree_to_statements(s.compute, model)),
                              tuple(tree_to_statements(s.action, model))))
        elif isinstance(s, CSelect):
            out.append(Select(tuple(tuple(tree_to_statements(a, model)) for a in s.alternatives)))
        elif isinstance(s, CAlloc):
            out.append(Allocate(s.var, len(s.qubits)))
        elif isinstance(s, CFree):
            out.append(Free(s.var))
    return out


# -- flat ops ---------------------------------------------------------------------

@dataclass(frozen=True)
class LibOp:
    """One library call with its pushed-down controls."""

    function: str
    ctrl: tuple
    args: tuple
    consts: tuple = ()
    inverted: bool = False

    @property
    def qubits(self) -> tuple:
        return self.ctrl + tuple(q for a in self.args for q in a)

    @property
    def n_ctrl(self) -> int:
        return len(self.ctrl)

    @property
    def widths(self) -> tuple:
        return tuple(len(a) for a in self.args)

    def variants(self):
        return stdlib.variants_for(self.function, self.n_ctrl, self.widths, self.consts)

    def label(self) -> str:
        c = f"c{self.n_ctrl}-" if self.ctrl else ""
        inv = "^-1" if self.inverted else ""
        return f"{c}{self.function}{inv}"


@dataclass(frozen=True)
class AllocOp:
    var: str
    qubits: tuple


@dataclass(frozen=True)
class FreeOp:
    var: str
    qubits: tuple


@dataclass(frozen=True)
class CompositeOp:
    site: str
    alternatives: tuple  # tuple of op tuples

    @property
    def qubits(self) -> tuple:
        seen = {}
        for alt in self.alternatives:
            for op in alt:
                for q in op.qubits:
                    seen.setdefault(q, None)
        return tuple(seen)


_SELF_INVERSE = {"h", "x", "cx", "mcx", "hadamard_transform", "reflect_about_zero"}


def _lib_op(call: LibCall, ctrl: tuple, inverted: bool, where: str = "") -> LibOp:
    fn, args, consts = call.function, call.args, dict(call.consts)
    if set(ctrl) & {q for a in args for q in a}:
        raise ModelError(f"control qubit is also a target of {fn}", where or None)
    if fn in ("rz", "cphase") and inverted:
        consts["angle"] = -consts["angle"]
    if ctrl:
        if fn == "x" or fn == "mcx":
            fn, args = "mcx", args
        elif fn == "cx":
            ctrl = ctrl + args[0]
            fn, args = "mcx", (args[1],)
        elif fn not in ("reflect_about_zero", "add_const"):
            raise ModelError(f"{fn} cannot be controlled", where or None)
    elif fn == "mcx":
        fn = "x"
    inv = inverted and fn not in _SELF_INVERSE and fn not in ("rz", "cphase")
    op = LibOp(fn, tuple(ctrl), tuple(args), tuple(sorted(consts.items())), inv)
    try:
        if not op.variants():
            raise ModelError(f"no implementation of {op.label()}")
    except stdlib.StdlibError as exc:
        raise ModelError(str(exc)) from None
    return op


def lower(tree, ctrl: tuple = (), inverted: bool = False) -> list:
    """Flatten a concrete tree into library, alloc/free and composite ops."""
    items = list(reversed(tree)) if inverted else list(tree)
    out: list = []
    for s in items:
        if isinstance(s, LibCall):
            out.append(_lib_op(s, ctrl, inverted))
        elif isinstance(s, CControl):
            flips = tuple(q for j, q in enumerate(s.ctrl) if not (s.value >> j) & 1)
            conj = [LibOp("x", (), ((q,),)) for q in flips]
            out.extend(conj)
            out.extend(lower(s.body, ctrl + s.ctrl, inverted))
            out.extend(conj)
        elif isinstance(s, CInvert):
            out.extend(lower(s.body, ctrl, not inverted))
        elif isinstance(s, CWithin):
            out.extend(lower(s.compute, (), False))
            out.extend(lower(s.action, ctrl, inverted))
            out.extend(lower(s.compute, (), True))
        elif isinstance(s, CSelect):
            out.append(CompositeOp(s.site, tuple(tuple(lower(a, ctrl, inverted)) for a in s.alternatives)))
        elif isinstance(s, CAlloc):
            out.append(FreeOp(s.var, s.qubits) if inverted else AllocOp(s.var, s.qubits))
        elif isinstance(s, CFree):
            out.append(AllocOp(s.var, s.qubits) if inverted else FreeOp(s.var, s.qubits))
    return out


def lower_model(model: Model, choices="all") -> list:
    return lower(elaborate(model, choices))


def flatten_ops(ops, pick=0) -> list:
    """Resolve every composite to alternative ``pick`` (clamped) recursively."""
    out = []
    for op in ops:
        if isinstance(op, CompositeOp):
            alt = op.alternatives[min(pick, len(op.alternatives) - 1)]
            out.extend(flatten_ops(alt, pick))
        else:
            out.append(op)
    return out
