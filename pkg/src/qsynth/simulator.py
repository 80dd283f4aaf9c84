"""Dense statevector oracle.

States are arrays of shape ``(batch, 2**n)``; a 1-D vector is treated as a
batch of one.  Caps keep memory bounded: 20 qubits for vectors and 12 for
full unitaries.
"""

from __future__ import annotations

import numpy as np

from .circuit import Circuit

VECTOR_CAP = 20
UNITARY_CAP = 12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class SimulationError(ValueError):
    pass


def _check_width(n: int, cap: int) -> None:
    if n > cap:
        raise SimulationError(f"{n} qubits exceeds simulator cap of {cap}")


def _axis(n: int, q: int) -> int:
    # tensor view (batch, q_{n-1}, ..., q_0): qubit q is axis n - q
    return n - q


def _apply_gate(t: np.ndarray, n: int, name: str, qubits, params) -> None:
    """Apply one gate in place to the tensor view ``t`` of shape ``(batch,) + (2,) * n``."""
    if name == "barrier":
        return
    if name in ("h", "x", "rz"):
        ax = _axis(n, qubits[0])
        lo = (slice(None),) * ax + (0,)
        hi = (slice(None),) * ax + (1,)
        if name == "x":
            tmp = t[lo].copy()
            t[lo] = t[hi]
            t[hi] = tmp
        elif name == "rz":
            theta = params[0]
            t[lo] *= np.exp(-0.5j * theta)
            t[hi] *= np.exp(0.5j * theta)
        else:
            a0 = t[lo].copy()
            a1 = t[hi]
            t[lo] = (a0 + a1) * _H[0, 0]
            t[hi] = (a0 - a1) * _H[0, 0]
        return
    if name == "cx":
        c, tq = qubits
        ac, at = _axis(n, c), _axis(n, tq)
        sub = t[(slice(None),) * ac + (1,)]  # view with control = 1
        at = at - 1 if at > ac else at
        lo = (slice(None),) * at + (0,)
        hi = (slice(None),) * at + (1,)
        tmp = sub[lo].copy()
        sub[lo] = sub[hi]
        sub[hi] = tmp
        return
    raise SimulationError(f"unsupported gate {name!r}")


def apply(circuit: Circuit, state: np.ndarray, cap: int = VECTOR_CAP) -> np.ndarray:
    """Apply ``circuit`` gate by gate; ``state`` may be 1-D or a batch."""
    n = circuit.num_qubits
    _check_width(n, cap)
    single = state.ndim == 1
    psi = np.array(state, dtype=complex).reshape(1 if single else state.shape[0], -1)
    if psi.shape[1] != 1 << n:
        raise SimulationError(f"state has {psi.shape[1]} amplitudes, circuit needs {1 << n}")
    t = psi.reshape((psi.shape[0],) + (2,) * n)
    for g in circuit.gates:
        _apply_gate(t, n, g.name, g.qubits, g.params)
    return psi[0] if single else psi


def basis_state(n: int, k: int) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[k] = 1.0
    return v


def unitary_of(circuit: Circuit, cap: int = UNITARY_CAP) -> np.ndarray:
    n = circuit.num_qubits
    _check_width(n, cap)
    cols = apply(circuit, np.eye(1 << n, dtype=complex), cap=cap)
    return cols.T


def restricted_unitary(circuit: Circuit, functional: list[int], cap: int = VECTOR_CAP) -> np.ndarray:
    """Columns: images of functional basis states with every other qubit at |0>.

    Returns a ``(2**n, 2**len(functional))`` matrix over the full register;
    functional bit ``j`` of the input index maps to qubit ``functional[j]``.
    """
    n = circuit.num_qubits
    _check_width(n, cap)
    m = len(functional)
    inputs = np.zeros((1 << m, 1 << n), dtype=complex)
    for k in range(1 << m):
        full = sum(1 << functional[j] for j in range(m) if (k >> j) & 1)
        inputs[k, full] = 1.0
    return apply(circuit, inputs, cap=cap).T


def project_functional(full: np.ndarray, n: int, functional: list[int]) -> tuple[np.ndarray, float]:
    """Split rows of ``full`` into the functional block (others |0>) and leaked weight."""
    m = len(functional)
    rows = [sum(1 << functional[j] for j in range(m) if (k >> j) & 1) for k in range(1 << m)]
    block = full[rows, :]
    leak = float(np.sum(np.abs(full) ** 2) - np.sum(np.abs(block) ** 2))
    return block, leak


def global_phase(a: np.ndarray, b: np.ndarray) -> complex:
    """Unit scalar ``c`` fitted on the largest amplitude so that ``a ~ c * b``."""
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) < 1e-12:
        return 1.0 + 0j
    c = a[k] / b[k]
    return c / abs(c) if abs(c) > 1e-12 else 1.0 + 0j


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    c = global_phase(a, b)
    return bool(np.allclose(a, c * b, atol=atol, rtol=0))


def is_unitary(u: np.ndarray, atol: float = 1e-9) -> bool:
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0))
