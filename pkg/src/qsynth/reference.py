"""Reference semantics of a model, independent of any implementation choice.

The interpreter walks the elaborated statement tree and applies each library
function by its mathematical definition (a permutation or a diagonal phase on
the statevector), never through the gate-level implementations in
:mod:`qsynth.stdlib`.  ``control`` restricts a body to the matching subspace,
``invert`` reverses it and negates phases, ``within`` conjugates.  This gives an
oracle that emitted circuits can be checked against.
"""

from __future__ import annotations

import numpy as np

from . import simulator as sim
from .circuit import Circuit
from .lowering import CAlloc, CControl, CFree, CInvert, CSelect, CWithin, LibCall, elaborate
from .model import Model

__all__ = ["ReferenceError", "reference_unitary", "verify_circuit", "VerifyReport"]

_ISQ2 = 1 / np.sqrt(2)


class ReferenceError(ValueError):
    """The model cannot be interpreted (too wide, or a local was not returned to |0>)."""


def _bits(idx, qubits):
    v = np.zeros_like(idx)
    for j, q in enumerate(qubits):
        v |= ((idx >> q) & 1) << j
    return v


def _with_bits(idx, qubits, values):
    out = idx.copy()
    for j, q in enumerate(qubits):
        out &= ~(1 << q)
        out |= ((values >> j) & 1) << q
    return out


class _Interpreter:
    def __init__(self, n: int, index: dict):
        self.n = n
        self.index = index
        self.idx = np.arange(1 << n)

    def q(self, refs):
        return [self.index[r] for r in refs]

    # every primitive acts on a batch of states, shape (batch, 2**n)
    def permute(self, state, qubits, f):
        """Basis permutation x -> f(x) on the bits ``qubits``."""
        val = _bits(self.idx, qubits)
        dest = _with_bits(self.idx, qubits, f(val) % (1 << len(qubits)))
        out = np.empty_like(state)
        out[:, dest] = state
        return out

    def phase(self, state, diag):
        return state * diag[None, :]

    def hadamard(self, state, q):
        bit = (self.idx >> q) & 1
        partner = self.idx ^ (1 << q)
        sign = np.where(bit == 1, -1.0, 1.0)
        return _ISQ2 * (state[:, partner] + sign[None, :] * state)

    def leaf(self, state, call: LibCall, inverted: bool):
        fn, consts = call.function, dict(call.consts)
        args = [self.q(a) for a in call.args]
        if fn == "h":
            return self.hadamard(state, args[0][0])
        if fn == "hadamard_transform":
            for q in args[0]:
                state = self.hadamard(state, q)
            return state
        if fn in ("x", "mcx"):
            return self.permute(state, args[0], lambda v: v ^ 1)
        if fn == "cx":
            c, t = args[0][0], args[1][0]
            return self.permute(state, [c, t], lambda v: v ^ ((v & 1) << 1))
        if fn == "rz":
            theta = -consts["angle"] if inverted else consts["angle"]
            bit = (self.idx >> args[0][0]) & 1
            return self.phase(state, np.exp(1j * theta * (bit - 0.5)))
        if fn == "cphase":
            theta = -consts["angle"] if inverted else consts["angle"]
            both = ((self.idx >> args[0][0]) & 1) & ((self.idx >> args[1][0]) & 1)
            return self.phase(state, np.exp(1j * theta * both))
        if fn == "reflect_about_zero":
            zero = _bits(self.idx, args[0]) == 0
            return self.phase(state, np.where(zero, -1.0, 1.0))
        if fn == "add_const":
            value = -consts["value"] if inverted else consts["value"]
            return self.permute(state, args[0], lambda v: v + value)
        raise ReferenceError(f"no reference semantics for {fn!r}")

    def run(self, state, body, inverted=False):
        items = reversed(body) if inverted else body
        for s in items:
            if isinstance(s, LibCall):
                state = self.leaf(state, s, inverted)
            elif isinstance(s, CControl):
                ctrl = self.q(s.ctrl)
                match = (_bits(self.idx, ctrl) == s.value)[None, :]
                inner = self.run(np.where(match, state, 0), s.body, inverted)
                state = np.where(match, inner, state)
            elif isinstance(s, CInvert):
                state = self.run(state, s.body, not inverted)
            elif isinstance(s, CWithin):
                state = self.run(state, s.compute, False)
                state = self.run(state, s.action, inverted)
                state = self.run(state, s.compute, True)
            elif isinstance(s, CSelect):
                state = self.run(state, s.alternatives[0], inverted)
            elif isinstance(s, (CAlloc, CFree)):
                releasing = isinstance(s, CFree) != inverted
                if releasing:
                    busy = _bits(self.idx, self.q(s.qubits)) != 0
                    if np.abs(state[:, busy]).max(initial=0.0) > 1e-9:
                        raise ReferenceError(f"local {s.var!r} is not returned to |0> before release")
        return state


def _local_refs(body, out):
    for s in body:
        if isinstance(s, CAlloc):
            for r in s.qubits:
                out.setdefault(r, None)
        elif isinstance(s, CControl):
            _local_refs(s.body, out)
        elif isinstance(s, CInvert):
            _local_refs(s.body, out)
        elif isinstance(s, CWithin):
            _local_refs(s.compute, out)
            _local_refs(s.action, out)
        elif isinstance(s, CSelect):
            _local_refs(s.alternatives[0], out)
    return out


def reference_unitary(model: Model, cap: int = 14) -> np.ndarray:
    """Action of ``model`` on its functional register, locals starting and ending at |0>.

    Returns a ``2**F x 2**F`` matrix in the emitter's bit order (functional
    bit ``j`` of an index is entry-variable bit ``j`` of ``model.layout()``).
    """
    tree = elaborate(model, {})
    index = dict(model.layout())
    F = len(index)
    for r in _local_refs(tree, {}):
        index[r] = len(index)
    n = len(index)
    if n > cap:
        raise ReferenceError(f"{n} qubits exceeds reference cap of {cap}")
    interp = _Interpreter(n, index)
    out = interp.run(np.eye(1 << F, 1 << n, dtype=complex), tree)
    return out[:, : 1 << F].T


class VerifyReport(dict):
    """``passed``, ``max_error``, ``leak`` and ``unitary`` for one circuit."""

    @property
    def passed(self) -> bool:
        return bool(self["passed"])


def verify_circuit(model: Model, circuit: Circuit, atol: float = 1e-9) -> VerifyReport:
    """Compare ``circuit`` (as emitted for ``model``) against the reference, up to global phase."""
    F = model.num_functional
    expected = reference_unitary(model)
    full = sim.restricted_unitary(circuit, list(range(F)))
    block, leak = sim.project_functional(full, circuit.num_qubits, list(range(F)))
    c = sim.global_phase(block, expected)
    err = float(np.abs(block - c * expected).max())
    ok = err <= atol and leak <= atol and sim.is_unitary(block, atol=max(atol, 1e-9))
    return VerifyReport(passed=ok, max_error=err, leak=leak, functional_qubits=F,
                        circuit_qubits=circuit.num_qubits)
