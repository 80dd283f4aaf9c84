import itertools

import numpy as np
import pytest

from qsynth import simulator as sim
from qsynth import stdlib
from qsynth.circuit import Circuit, measure


def functional_block(variant, n_ctrl_first=True):
    """Unitary of a variant's fragment on its non-aux qubits, aux held at |0>."""
    frag = variant.fragment()
    n_func = frag.num_qubits - variant.aux_count
    full = sim.restricted_unitary(frag, list(range(n_func)))
    block, leak = sim.project_functional(full, frag.num_qubits, list(range(n_func)))
    return block, leak


def mcx_oracle(n_ctrl):
    dim = 1 << (n_ctrl + 1)
    U = np.zeros((dim, dim))
    full = (1 << n_ctrl) - 1
    for k in range(dim):
        ctrl = k & full
        U[k ^ (1 << n_ctrl) if ctrl == full else k, k] = 1
    return U


def add_oracle(width, value, n_ctrl=0):
    dim = 1 << (n_ctrl + width)
    U = np.zeros((dim, dim))
    for k in range(dim):
        c, x = k & ((1 << n_ctrl) - 1), k >> n_ctrl
        if n_ctrl == 0 or c == (1 << n_ctrl) - 1:
            x = (x + value) % (1 << width)
        U[c | (x << n_ctrl), k] = 1
    return U


def test_mcx_one_control_is_a_cx():
    (v,) = stdlib.mcx_variants(1)
    assert v.aux_count == 0
    assert v.profile.count("cx") == 1
    assert [g.name for g in v.fragment().gates] == ["cx"]


def test_mcx_two_controls_is_the_six_cx_toffoli():
    (v,) = stdlib.mcx_variants(2)
    assert (v.aux_count, v.profile.count("cx")) == (0, 6)
    block, leak = functional_block(v)
    assert sim.equal_up_to_phase(block, mcx_oracle(2))


def test_mcx_six_controls_chain_beats_zero_aux():
    variants = {v.variant_id: v for v in stdlib.mcx_variants(6)}
    chain, noaux = variants["mcx.chain"], variants["mcx.noaux"]
    assert chain.aux_count == 4
    assert chain.profile.count("cx") < noaux.profile.count("cx")
    for v in (chain, noaux):
        block, leak = functional_block(v)
        assert abs(leak) < 1e-9
        assert np.allclose(block, sim.global_phase(block, mcx_oracle(6)) * mcx_oracle(6), atol=1e-9)


def test_mcx_offers_a_three_point_tradeoff():
    auxes = sorted(v.aux_count for v in stdlib.mcx_variants(5))
    assert auxes == [0, 1, 3]


@pytest.mark.parametrize("n_ctrl", range(1, 8))
def test_mcx_cx_count_non_increasing_in_aux(n_ctrl):
    pts = sorted((v.aux_count, v.profile.count("cx")) for v in stdlib.mcx_variants(n_ctrl))
    assert all(b[1] <= a[1] for a, b in zip(pts, pts[1:]))


def test_mcx_zero_aux_quadratic_chain_linear():
    noaux = [v.profile.count("cx") for n in (8, 16) for v in stdlib.mcx_variants(n) if v.variant_id == "mcx.noaux"]
    chain = [v.profile.count("cx") for n in (8, 16) for v in stdlib.mcx_variants(n) if v.variant_id == "mcx.chain"]
    assert noaux[1] / noaux[0] > 3.0  # ~4x for doubling
    assert chain[1] / chain[0] < 2.5  # ~2x for doubling


def test_mcx_rejects_zero_controls():
    with pytest.raises(stdlib.StdlibError):
        stdlib.mcx_variants(0)


@pytest.mark.parametrize("n_ctrl", [3, 4])
def test_mcx_chain_returns_aux_to_zero_on_all_basis_states(n_ctrl):
    v = next(v for v in stdlib.mcx_variants(n_ctrl) if v.variant_id == "mcx.chain")
    frag = v.fragment()
    n_func = n_ctrl + 1
    for k in range(1 << n_func):
        out = sim.apply(frag, sim.basis_state(frag.num_qubits, k))
        busy = [i for i in range(1 << frag.num_qubits) if i >> n_func]
        assert np.abs(out[busy]).max() < 1e-9


@pytest.mark.parametrize("width", [1, 2, 3, 4])
@pytest.mark.parametrize("value", [1, 3, 6])
def test_adders_add_constant_mod_2_to_the_width(width, value):
    for v in stdlib.adder_variants(width, value):
        block, leak = functional_block(v)
        assert abs(leak) < 1e-9
        expected = add_oracle(width, value)
        assert np.allclose(block, sim.global_phase(block, expected) * expected, atol=1e-9), v.variant_id


@pytest.mark.parametrize("width", [2, 3])
def test_controlled_adders(width):
    for v in stdlib.adder_variants(width, 1, n_ctrl=1):
        block, _ = functional_block(v)
        expected = add_oracle(width, 1, n_ctrl=1)
        assert np.allclose(block, sim.global_phase(block, expected) * expected, atol=1e-9), v.variant_id


def test_adder_families_tradeoff():
    qft, rca = sorted(stdlib.adder_variants(5, 1), key=lambda v: v.variant_id)
    assert (qft.variant_id, rca.variant_id) == ("add.qft", "add.rca")
    assert qft.aux_count == 0
    assert rca.aux_count == 4
    assert rca.profile.count("cx") < qft.profile.count("cx")


def test_adder_rejects_zero_width():
    with pytest.raises(stdlib.StdlibError):
        stdlib.adder_variants(0)


@pytest.mark.parametrize("width", [1, 2, 3, 4])
def test_reflect_about_zero(width):
    expected = np.eye(1 << width)
    expected[0, 0] = -1
    for v in stdlib.reflect_variants(0, width):
        block, leak = functional_block(v)
        assert abs(leak) < 1e-9
        assert sim.equal_up_to_phase(block, expected)


def test_primitive_generators():
    (h,) = stdlib.variants_for("h", 0, (1,))
    assert h.generate([], [[3]], []) == [stdlib.Gate("h", (3,))]
    (cx,) = stdlib.variants_for("cx", 0, (1, 1))
    assert cx.profile == stdlib.Profile(0, 1, (("cx", 1), ("single", 0)))


def test_generate_checks_arity():
    (v,) = stdlib.mcx_variants(2)
    with pytest.raises(stdlib.StdlibError):
        v.generate([0], [[1]], [])
    chain = next(v for v in stdlib.mcx_variants(3) if v.variant_id == "mcx.chain")
    with pytest.raises(stdlib.StdlibError):
        chain.generate([0, 1, 2], [[3]], [])


def _all_variant_sets():
    for n in range(1, 6):
        yield stdlib.mcx_variants(n)
    for w in range(1, 5):
        yield stdlib.adder_variants(w, 3)
        yield stdlib.adder_variants(w, 5, n_ctrl=1)
        yield stdlib.reflect_variants(0, w)
        yield stdlib.reflect_variants(1, w)


def test_profile_fidelity():
    for variants in _all_variant_sets():
        for v in variants:
            m = measure(v.fragment())
            assert v.profile.aux == v.aux_count
            assert v.profile.depth == m.depth
            assert v.profile.counts == m.counts


def test_variants_are_mutually_equivalent():
    for variants in _all_variant_sets():
        blocks = [functional_block(v)[0] for v in variants if v.fragment().num_qubits <= 9]
        for a, b in itertools.combinations(blocks, 2):
            assert sim.equal_up_to_phase(a, b)


def test_inverted_generation_is_the_inverse():
    v = next(v for v in stdlib.adder_variants(3, 5) if v.variant_id == "add.rca")
    ctrl, args, aux, n = v.fresh_operands()
    circ = Circuit(n, v.generate(ctrl, args, aux) + v.generate(ctrl, args, aux, inverted=True))
    assert np.allclose(sim.unitary_of(circ), np.eye(1 << n), atol=1e-9)


def test_profile_table_rows():
    rows = stdlib.profile_table(3, 2)
    assert {"function", "variant", "shape", "aux", "depth", "cx", "single"} <= set(rows[0])
    assert any(r["variant"] == "mcx.chain" and r["shape"] == "n_ctrl=3" and r["aux"] == 1 for r in rows)
