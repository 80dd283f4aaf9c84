import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsynth import simulator as sim
from qsynth import stdlib
from qsynth.circuit import Circuit, Gate


def test_h_on_zero():
    c = Circuit(1, [Gate("h", (0,))])
    assert np.allclose(sim.apply(c, sim.basis_state(1, 0)), np.array([1, 1]) / np.sqrt(2))


def test_x_on_zero():
    c = Circuit(1, [Gate("x", (0,))])
    assert np.allclose(sim.apply(c, sim.basis_state(1, 0)), [0, 1])


def test_increment_on_five():
    # x[0..2] += 1 as an MCX cascade: mcx(x0,x1 -> x2), cx(x0 -> x1), x(x0)
    (tof,) = stdlib.mcx_variants(2)
    c = Circuit(3, tof.generate([0, 1], [[2]], []) + [Gate("cx", (0, 1)), Gate("x", (0,))])
    out = sim.apply(c, sim.basis_state(3, 5))
    k = int(np.argmax(np.abs(out)))
    assert k == 6 and abs(abs(out[k]) - 1) < 1e-9


def test_empty_circuit_is_identity():
    assert np.allclose(sim.unitary_of(Circuit(3)), np.eye(8))


def test_cx_truth_table():
    c = Circuit(2, [Gate("cx", (0, 1))])
    U = sim.unitary_of(c)
    # control is qubit 0 (LSB): |01> (index 1) -> |11> (index 3)
    assert U[3, 1] == 1 and U[1, 3] == 1 and U[0, 0] == 1 and U[2, 2] == 1


def test_cx_with_control_above_target():
    c = Circuit(3, [Gate("cx", (2, 0))])
    U = sim.unitary_of(c)
    assert U[0b101, 0b100] == 1 and U[0b001, 0b001] == 1


def test_rz_phases():
    c = Circuit(1, [Gate("rz", (0,), (0.7,))])
    assert np.allclose(sim.unitary_of(c), np.diag([np.exp(-0.35j), np.exp(0.35j)]))


def test_reflect_about_zero_two_qubits():
    (v,) = stdlib.reflect_variants(0, 2)
    assert sim.equal_up_to_phase(sim.unitary_of(v.fragment()), np.diag([-1, 1, 1, 1]))


def test_width_caps():
    with pytest.raises(sim.SimulationError):
        sim.unitary_of(Circuit(13))
    with pytest.raises(sim.SimulationError):
        sim.apply(Circuit(21), np.zeros(2))


def test_state_size_mismatch():
    with pytest.raises(sim.SimulationError):
        sim.apply(Circuit(2), np.zeros(8))


def test_apply_does_not_mutate_input():
    psi = sim.basis_state(2, 0)
    sim.apply(Circuit(2, [Gate("x", (0,))]), psi)
    assert psi[0] == 1


def test_unknown_gate():
    with pytest.raises(sim.SimulationError):
        sim.apply(Circuit(1, [Gate("t", (0,))]), sim.basis_state(1, 0))


def test_global_phase_fit():
    a = np.eye(4) * np.exp(0.3j)
    assert np.isclose(sim.global_phase(a, np.eye(4)), np.exp(0.3j))
    assert sim.equal_up_to_phase(a, np.eye(4))
    assert not sim.equal_up_to_phase(np.diag([1, 1, 1, -1]), np.eye(4))


def test_project_functional_reports_leak():
    # x on the aux qubit: every functional input leaks completely
    c = Circuit(2, [Gate("x", (1,))])
    full = sim.restricted_unitary(c, [0])
    block, leak = sim.project_functional(full, 2, [0])
    assert np.allclose(block, 0) and np.isclose(leak, 2.0)


gates = st.one_of(
    st.builds(lambda q: Gate("h", (q,)), st.integers(0, 3)),
    st.builds(lambda q: Gate("x", (q,)), st.integers(0, 3)),
    st.builds(lambda q, t: Gate("rz", (q,), (t,)), st.integers(0, 3), st.floats(-6, 6)),
    st.builds(lambda a, b: Gate("cx", (a, b)), st.integers(0, 3), st.integers(0, 3)).filter(
        lambda g: g.qubits[0] != g.qubits[1]),
)


def _kron_reference(circuit):
    """Dense reference built from Kronecker products (qubit 0 = rightmost factor)."""
    n = circuit.num_qubits
    I, X = np.eye(2), np.array([[0, 1], [1, 0]])
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    P0, P1 = np.diag([1, 0]), np.diag([0, 1])

    def embed(ops):
        out = np.array([[1.0 + 0j]])
        for q in range(n - 1, -1, -1):
            out = np.kron(out, ops.get(q, I))
        return out

    U = np.eye(1 << n, dtype=complex)
    for g in circuit.gates:
        if g.name == "h":
            M = embed({g.qubits[0]: H})
        elif g.name == "x":
            M = embed({g.qubits[0]: X})
        elif g.name == "rz":
            t = g.params[0]
            M = embed({g.qubits[0]: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])})
        else:
            c, t = g.qubits
            M = embed({c: P0}) + embed({c: P1, t: X})
        U = M @ U
    return U


@settings(max_examples=60, deadline=None)
@given(st.lists(gates, max_size=12))
def test_unitary_matches_kronecker_reference(gs):
    c = Circuit(4, gs)
    U = sim.unitary_of(c)
    assert np.allclose(U, _kron_reference(c), atol=1e-9)
    assert sim.is_unitary(U)
