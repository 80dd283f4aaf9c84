"""Library functions with several fixed implementations each.

Every implementation (``ImplVariant``) is a deterministic gate generator.
Its resource profile is never written down by hand: it is obtained by
generating the fragment on fresh qubits and measuring it, so the numbers the
solver reasons about are exactly the numbers the emitter produces.

Generators take ``(ctrl, args, aux)``: extra control qubits pushed down by
``control`` blocks, one qubit list per parameter, and clean auxiliary qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

from .circuit import Circuit, Gate, asap_depth, count_gates

PI = math.pi


class StdlibError(ValueError):
    pass


# -- elementary building blocks -------------------------------------------------

def _h(q):
    return [Gate("h", (q,))]


def _x(q):
    return [Gate("x", (q,))]


def _rz(theta, q):
    return [Gate("rz", (q,), (float(theta),))]


def _cx(c, t):
    return [Gate("cx", (c, t))]


def cphase(theta, a, b):
    """diag(1, 1, 1, e^{i theta}) up to global phase; 2 CX."""
    return _rz(theta / 2, a) + _cx(a, b) + _rz(-theta / 2, b) + _cx(a, b) + _rz(theta / 2, b)


def toffoli(c1, c2, t):
    """Standard 6-CX Toffoli with T gates written as RZ(pi/4)."""
    t4, td4 = PI / 4, -PI / 4
    return (
        _h(t) + _cx(c2, t) + _rz(td4, t) + _cx(c1, t) + _rz(t4, t) + _cx(c2, t)
        + _rz(td4, t) + _cx(c1, t) + _rz(t4, c2) + _rz(t4, t) + _h(t)
        + _cx(c1, c2) + _rz(t4, c1) + _rz(td4, c2) + _cx(c1, c2)
    )


def rtoffoli(c1, c2, t):
    """Toffoli up to a diagonal relative phase; 3 CX.

    Only valid when it is later undone by its exact inverse while the three
    qubits are used at most as controls in between.
    """
    t4, td4 = PI / 4, -PI / 4
    return (
        _h(t) + _rz(t4, t) + _cx(c2, t) + _rz(td4, t) + _cx(c1, t)
        + _rz(t4, t) + _cx(c2, t) + _rz(td4, t) + _h(t)
    )


def invert_gates(gates):
    return [g.inverse() for g in reversed(gates)]


# -- multi-controlled X ---------------------------------------------------------

def mcx_clean_chain(ctrls, target, aux):
    """Compute the AND ladder into clean aux, hit the target, uncompute."""
    m = len(ctrls)
    if m == 1:
        return _cx(ctrls[0], target)
    if m == 2:
        return toffoli(ctrls[0], ctrls[1], target)
    if len(aux) < m - 2:
        raise StdlibError(f"chain MCX with {m} controls needs {m - 2} aux, got {len(aux)}")
    ladder = rtoffoli(ctrls[0], ctrls[1], aux[0])
    for i in range(2, m - 1):
        ladder += rtoffoli(ctrls[i], aux[i - 2], aux[i - 1])
    return ladder + toffoli(ctrls[m - 1], aux[m - 3], target) + invert_gates(ladder)


def _mcx_dirty_vchain(ctrls, target, dirty):
    """m controls with m-2 borrowed qubits in arbitrary states; 4(m-2) Toffolis."""
    m = len(ctrls)
    a = dirty
    inner_down = []
    for i in range(m - 2, 1, -1):
        inner_down += toffoli(ctrls[i], a[i - 2], a[i - 1])
    inner_up = []
    for i in range(2, m - 1):
        inner_up += toffoli(ctrls[i], a[i - 2], a[i - 1])
    base = toffoli(ctrls[0], ctrls[1], a[0])
    top = toffoli(ctrls[m - 1], a[m - 3], target)
    return top + inner_down + base + inner_up + top + inner_down + base + inner_up


def _halves(ctrls):
    m1 = (len(ctrls) + 1) // 2
    return list(ctrls[:m1]), list(ctrls[m1:])


def mcx_borrowing(ctrls, target, pool):
    """MCX using qubits of ``pool`` as borrowed (dirty) workspace."""
    m = len(ctrls)
    if m == 1:
        return _cx(ctrls[0], target)
    if m == 2:
        return toffoli(ctrls[0], ctrls[1], target)
    if len(pool) >= m - 2:
        return _mcx_dirty_vchain(ctrls, target, list(pool[: m - 2]))
    if not pool:
        raise StdlibError("borrowing MCX needs at least one spare qubit")
    a = pool[0]
    low, high = _halves(ctrls)
    u1 = mcx_borrowing(low, a, high + [target])
    u2 = mcx_borrowing(high + [a], target, low)
    return u2 + u1 + u2 + u1


def mcx_split(ctrls, target, aux):
    """Recursive halving through one clean auxiliary qubit."""
    a = aux[0]
    low, high = _halves(ctrls)
    u1 = mcx_borrowing(low, a, high + [target])
    u2 = mcx_borrowing(high + [a], target, low)
    return u1 + u2 + u1


def mcphase(theta, qubits, spare=()):
    """Phase e^{i theta} on the all-ones state of ``qubits``; no auxiliaries."""
    k = len(qubits)
    if k == 1:
        return _rz(theta, qubits[0])
    if k == 2:
        return cphase(theta, qubits[0], qubits[1])
    head, pivot, last = list(qubits[: k - 2]), qubits[k - 2], qubits[k - 1]
    flip = mcx_borrowing(head, pivot, [last, *spare])
    return (
        cphase(theta / 2, pivot, last) + flip + cphase(-theta / 2, pivot, last) + flip
        + mcphase(theta / 2, head + [last], (*spare, pivot))
    )


def mcx_noaux(ctrls, target):
    m = len(ctrls)
    if m <= 2:
        return mcx_clean_chain(ctrls, target, [])
    return _h(target) + mcphase(PI, list(ctrls) + [target]) + _h(target)


# -- variants -------------------------------------------------------------------

Generator = Callable[[list, list, list], list]


@dataclass(frozen=True)
class Profile:
    aux: int
    depth: int
    counts: tuple[tuple[str, int], ...]

    def count(self, gate_class: str) -> int:
        return dict(self.counts).get(gate_class, 0)


@dataclass(frozen=True)
class ImplVariant:
    """One fixed implementation of a library function for one call shape."""

    function: str
    variant_id: str
    n_ctrl: int
    widths: tuple[int, ...]
    consts: tuple
    aux_count: int
    builder: Generator = field(compare=False, repr=False)

    def generate(self, ctrl, args, aux, inverted: bool = False) -> list[Gate]:
        ctrl, args, aux = list(ctrl), [list(a) for a in args], list(aux)
        if len(ctrl) != self.n_ctrl:
            raise StdlibError(f"{self.variant_id}: expected {self.n_ctrl} controls, got {len(ctrl)}")
        if tuple(len(a) for a in args) != self.widths:
            raise StdlibError(f"{self.variant_id}: operand widths {[len(a) for a in args]} != {list(self.widths)}")
        if len(aux) != self.aux_count:
            raise StdlibError(f"{self.variant_id}: expected {self.aux_count} aux, got {len(aux)}")
        gates = self.builder(ctrl, args, aux)
        return invert_gates(gates) if inverted else gates

    def fresh_operands(self):
        n = 0
        ctrl = list(range(n, n + self.n_ctrl))
        n += self.n_ctrl
        args = []
        for w in self.widths:
            args.append(list(range(n, n + w)))
            n += w
        aux = list(range(n, n + self.aux_count))
        return ctrl, args, aux, n + self.aux_count

    def fragment(self) -> Circuit:
        ctrl, args, aux, n = self.fresh_operands()
        return Circuit(n, self.generate(ctrl, args, aux))

    @property
    def profile(self) -> Profile:
        return _profile(self)


@lru_cache(maxsize=None)
def _profile(variant: ImplVariant) -> Profile:
    frag = variant.fragment()
    counts = count_gates(frag.gates)
    return Profile(variant.aux_count, asap_depth(frag.gates), tuple(sorted(counts.items())))


def resource_profile(variant: ImplVariant) -> Profile:
    return variant.profile


def mcx_variants(n_ctrl: int) -> list[ImplVariant]:
    if n_ctrl < 1:
        raise StdlibError("MCX needs at least one control")
    return list(_mcx_variants(n_ctrl))


def _mcx_flat(fn, n_ctrl, widths, consts, vid, aux_count, body):
    # body(ctrls, target, aux); controls and the single target come from one flat list
    def build(ctrl, args, aux):
        qs = list(ctrl) + [q for a in args for q in a]
        return body(qs[:-1], qs[-1], aux)

    return ImplVariant(fn, vid, n_ctrl, widths, consts, aux_count, build)


@lru_cache(maxsize=None)
def _mcx_variants(n_ctrl: int) -> tuple[ImplVariant, ...]:
    # exposed as function "mcx" with all controls in ``ctrl`` and target as the only arg
    def make(vid, aux, body):
        return _mcx_flat("mcx", n_ctrl, (1,), (), vid, aux, body)

    if n_ctrl == 1:
        return (make("mcx.cx", 0, lambda c, t, a: _cx(c[0], t)),)
    if n_ctrl == 2:
        return (make("mcx.toffoli", 0, lambda c, t, a: toffoli(c[0], c[1], t)),)
    out = [make("mcx.noaux", 0, lambda c, t, a: mcx_noaux(c, t))]
    if n_ctrl >= 4:
        out.append(make("mcx.split", 1, mcx_split))
    out.append(make("mcx.chain", n_ctrl - 2, mcx_clean_chain))
    return tuple(out)


def _reflect_body(inner):
    def build(ctrl, args, aux):
        (x,) = args
        qs = list(ctrl) + list(x)
        flips = [g for q in x for g in _x(q)]
        t = qs[-1]
        return flips + _h(t) + inner(qs[:-1], t, aux) + _h(t) + flips

    return build


def reflect_variants(n_ctrl: int, width: int) -> list[ImplVariant]:
    """I - 2|0><0| on ``width`` qubits, optionally controlled."""
    if width < 1:
        raise StdlibError("reflect_about_zero needs at least one qubit")
    total = n_ctrl + width
    shape = dict(function="reflect_about_zero", n_ctrl=n_ctrl, widths=(width,), consts=())
    if total == 1:
        return [ImplVariant(variant_id="reflect.z", aux_count=0,
                            builder=_reflect_body(lambda c, t, a: _x(t)), **shape)]
    out = []
    for v in _mcx_variants(total - 1):
        body = v.builder
        inner = (lambda b: lambda c, t, a: b(c, [[t]], a))(body)
        out.append(ImplVariant(variant_id="reflect." + v.variant_id.split(".", 1)[1],
                               aux_count=v.aux_count, builder=_reflect_body(inner), **shape))
    return out


def _fourier(x):
    """Swap-free transform: qubit j ends up carrying phase 2*pi*v / 2**(j+1)."""
    gates = []
    for j in range(len(x) - 1, -1, -1):
        gates += _h(x[j])
        for k in range(j):
            gates += cphase(PI / 2 ** (j - k), x[k], x[j])
    return gates


def _qft_add_const(value):
    def build(ctrl, args, aux):
        (x,) = args
        m = len(x)
        c = value % (1 << m)
        if c == 0:
            return []
        phases = []
        for j in range(m):
            theta = math.remainder(2 * PI * c / 2 ** (j + 1), 2 * PI)
            if abs(theta) < 1e-15:
                continue
            phases += cphase(theta, ctrl[0], x[j]) if ctrl else _rz(theta, x[j])
        f = _fourier(x)
        return f + phases + invert_gates(f)

    return build


def _carry_block(i, x, carries, k_bit, ctrl):
    """Compute carry i+1 of ``x + k`` (gated by ``ctrl``) into a clean qubit."""
    out = carries[i]
    if i == 0:
        if not k_bit:
            return []
        return rtoffoli(ctrl[0], x[0], out) if ctrl else _cx(x[0], out)
    c = carries[i - 1]
    if not k_bit:
        return rtoffoli(x[i], c, out)
    if ctrl:
        # ctrl*(x | c) == ctrl*x ^ c ^ x*c because a set carry implies ctrl
        return rtoffoli(ctrl[0], x[i], out) + _cx(c, out) + rtoffoli(x[i], c, out)
    flips = _x(x[i]) + _x(c)
    return flips + rtoffoli(x[i], c, out) + _x(out) + flips


def _rca_add_const(value):
    def build(ctrl, args, aux):
        (x,) = args
        m = len(x)
        c = value % (1 << m)
        if c == 0:
            return []
        bits = [(c >> i) & 1 for i in range(m)]

        def add_bit(i):
            if not bits[i]:
                return []
            return _cx(ctrl[0], x[i]) if ctrl else _x(x[i])

        blocks = [_carry_block(i, x, aux, bits[i], ctrl) for i in range(m - 1)]
        gates = [g for b in blocks for g in b]
        for i in range(m - 1, 0, -1):
            gates += _cx(aux[i - 1], x[i]) + add_bit(i) + invert_gates(blocks[i - 1])
        return gates + add_bit(0)

    return build


def adder_variants(width: int, value: int = 1, n_ctrl: int = 0) -> list[ImplVariant]:
    """In-place ``x += value (mod 2**width)``: QFT (0 aux) and ripple-carry (width-1 carry aux)."""
    if width < 1:
        raise StdlibError("adder width must be >= 1")
    if n_ctrl > 1:
        raise StdlibError("add_const supports at most one control qubit")
    return list(_adder_variants(width, int(value), n_ctrl))


@lru_cache(maxsize=None)
def _adder_variants(width, value, n_ctrl):
    shape = dict(function="add_const", n_ctrl=n_ctrl, widths=(width,), consts=(("value", value),))
    return (
        ImplVariant(variant_id="add.qft", aux_count=0, builder=_qft_add_const(value), **shape),
        ImplVariant(variant_id="add.rca", aux_count=width - 1, builder=_rca_add_const(value), **shape),
    )


def _single(fn, vid, n_ctrl, widths, consts, body):
    return [ImplVariant(fn, vid, n_ctrl, widths, consts, 0, body)]


# -- registry -------------------------------------------------------------------

# name -> (parameter kinds, classical parameter names)
SIGNATURES = {
    "h": (("qubit",), ()),
    "x": (("qubit",), ()),
    "cx": (("qubit", "qubit"), ()),
    "rz": (("qubit",), ("angle",)),
    "cphase": (("qubit", "qubit"), ("angle",)),
    "hadamard_transform": (("qubit-array",), ()),
    "reflect_about_zero": (("qubit-array",), ()),
    "add_const": (("qnum",), ("value",)),
    "mcx": (("qubit",), ()),
}

PRIMITIVE_GATES = {"H": "h", "X": "x", "RZ": "rz", "CX": "cx", "CPHASE": "cphase"}


def is_library_function(name: str) -> bool:
    return name in SIGNATURES


def variants_for(function: str, n_ctrl: int, widths, consts=()) -> list[ImplVariant]:
    """All implementations of ``function`` for one call shape.

    ``x`` and ``cx`` under controls are rewritten to ``mcx`` by the lowering;
    asking for them here with controls is an error.
    """
    widths = tuple(widths)
    consts = tuple(sorted(dict(consts).items()))
    c = dict(consts)
    if function == "mcx":
        return mcx_variants(n_ctrl)
    if function == "reflect_about_zero":
        return reflect_variants(n_ctrl, widths[0])
    if function == "add_const":
        return adder_variants(widths[0], c.get("value", 1), n_ctrl)
    if n_ctrl:
        raise StdlibError(f"{function} cannot be controlled")
    if function == "h":
        return _single(function, "h", 0, widths, consts, lambda ct, a, x: _h(a[0][0]))
    if function == "x":
        return _single(function, "x", 0, widths, consts, lambda ct, a, x: _x(a[0][0]))
    if function == "cx":
        return _single(function, "cx", 0, widths, consts, lambda ct, a, x: _cx(a[0][0], a[1][0]))
    if function == "rz":
        theta = float(c["angle"])
        return _single(function, "rz", 0, widths, consts, lambda ct, a, x: _rz(theta, a[0][0]))
    if function == "cphase":
        theta = float(c["angle"])
        return _single(function, "cphase", 0, widths, consts,
                       lambda ct, a, x: cphase(theta, a[0][0], a[1][0]))
    if function == "hadamard_transform":
        return _single(function, "hadamard_transform", 0, widths, consts,
                       lambda ct, a, x: [g for q in a[0] for g in _h(q)])
    raise StdlibError(f"unknown library function {function!r}")


def generate(variant: ImplVariant, operands, aux, ctrl=(), inverted=False) -> list[Gate]:
    return variant.generate(ctrl, operands, aux, inverted=inverted)


def profile_table(max_ctrl: int = 8, max_width: int = 8) -> list[dict]:
    rows = []

    def add(shape, v):
        p = v.profile
        rows.append({"function": v.function, "variant": v.variant_id, "shape": shape,
                     "aux": p.aux, "depth": p.depth, "cx": p.count("cx"), "single": p.count("single")})

    for n in range(1, max_ctrl + 1):
        for v in mcx_variants(n):
            add(f"n_ctrl={n}", v)
    for w in range(1, max_width + 1):
        for v in adder_variants(w, 1):
            add(f"width={w}", v)
        for v in reflect_variants(0, w):
            add(f"width={w}", v)
    return rows
