import numpy as np
import pytest

from qsynth import simulator as sim
from qsynth.benchmarks import a_matrix, build_block_encoding_model, build_walk_model, walk_document, walk_step_matrix
from qsynth.circuit import Gate
from qsynth.domains import ConstraintSet
from qsynth.lowering import AllocOp, CompositeOp, FreeOp, LibOp, lower_model
from qsynth.model import ModelError, model_from_dict
from qsynth.reference import ReferenceError, reference_unitary, verify_circuit
from qsynth.synthesis import synthesize


def model(body, variables=None, **functions):
    fns = dict(functions)
    fns["main"] = {"params": [], "body": body}
    return model_from_dict({"entry": "main", "variables": variables or {"q": 3}, "functions": fns})


def lib_ops(m):
    return [op for op in lower_model(m) if isinstance(op, LibOp)]


def test_control_on_value_conjugates_zero_bits():
    ops = lib_ops(model([{"control": "q[0:2]", "equals": 1, "body": [{"gate": "X", "qubits": ["q[2]"]}]}]))
    assert [(o.function, o.ctrl) for o in ops] == [
        ("x", ()), ("mcx", (("q", 0), ("q", 1))), ("x", ())]
    assert ops[0].args == ((("q", 1),),)


def test_cx_under_control_becomes_mcx():
    ops = lib_ops(model([{"control": "q[0]", "equals": 1, "body": [{"gate": "CX", "qubits": ["q[1]", "q[2]"]}]}]))
    (op,) = ops
    assert op.function == "mcx" and op.ctrl == (("q", 0), ("q", 1)) and op.args == ((("q", 2),),)


def test_within_under_control_controls_only_the_action():
    m = model([{"control": "q[0]", "equals": 1, "body": [
        {"within": [{"gate": "H", "qubits": ["q[1]"]}], "apply": [{"gate": "X", "qubits": ["q[1]"]}]}]}])
    assert [(o.function, o.n_ctrl) for o in lib_ops(m)] == [("h", 0), ("mcx", 1), ("h", 0)]


def test_uncontrolled_gates_cannot_hide_controls():
    with pytest.raises(ModelError, match="cannot be controlled"):
        lower_model(model([{"control": "q[0]", "equals": 1, "body": [{"gate": "H", "qubits": ["q[1]"]}]}]))


def test_invert_reverses_and_negates_angles():
    m = model([{"invert": [{"gate": "H", "qubits": ["q[0]"]}, {"gate": "RZ", "qubits": ["q[1]"], "angle": 0.25},
                           {"call": "add_const", "args": ["q", 3]}]}])
    ops = lib_ops(m)
    assert [o.function for o in ops] == ["add_const", "rz", "h"]
    assert ops[0].inverted and not ops[1].inverted
    assert dict(ops[1].consts)["angle"] == -0.25


def test_repeat_unrolls_with_index():
    ops = lib_ops(model([{"repeat": 3, "index": "i", "body": [{"gate": "X", "qubits": ["q[i]"]}]}]))
    assert [o.args[0][0] for o in ops] == [("q", 0), ("q", 1), ("q", 2)]


def increment_only(N):
    fns = {k: v for k, v in walk_document(N)["functions"].items() if k in ("my_mcx", "increment")}
    fns["main"] = {"params": [], "body": [{"call": "increment", "args": ["x"]}]}
    return model_from_dict({"entry": "main", "variables": {"x": N}, "functions": fns})


def test_walk_increment_structure():
    # N=3: two MCX calls (control sizes 2, 1) + X
    assert [(o.function, o.n_ctrl) for o in lib_ops(increment_only(3))] == [("mcx", 2), ("mcx", 1), ("x", 0)]


def test_walk_n1_increment_is_single_x():
    assert [(o.function, o.n_ctrl) for o in lib_ops(increment_only(1))] == [("x", 0)]


def test_allocate_free_and_select_ops():
    m = model([{"allocate": "t", "width": 2},
               {"select": [[{"gate": "X", "qubits": ["t[0]"]}], [{"gate": "H", "qubits": ["t[0]"]},
                                                                  {"gate": "H", "qubits": ["t[0]"]}]]},
               {"free": "t"}])
    ops = lower_model(m)
    assert isinstance(ops[0], AllocOp) and isinstance(ops[-1], FreeOp)
    assert isinstance(ops[1], CompositeOp) and len(ops[1].alternatives) == 2


# reference semantics ----------------------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_reference_walk_matches_shift_operator(N):
    assert np.allclose(reference_unitary(build_walk_model(N)), walk_step_matrix(N), atol=1e-12)


def test_reference_block_encoding_top_left_is_a():
    R = reference_unitary(build_block_encoding_model(2))
    assert np.allclose(R[:4, :4], a_matrix(2), atol=1e-12)
    assert sim.is_unitary(R)


def test_reference_refuses_dirty_local():
    m = model([{"allocate": "t"}, {"gate": "X", "qubits": ["t"]}, {"free": "t"}])
    with pytest.raises(ReferenceError, match="not returned"):
        reference_unitary(m)


@pytest.mark.parametrize("fn, extra", [("add_const", [3]), ("reflect_about_zero", [])])
def test_controlled_invert_then_forward_is_identity(fn, extra):
    # control(c){invert{F}; F} followed by control(c){F; invert{F}} is the identity
    call = {"call": fn, "args": ["x"] + extra}
    block = [{"invert": [call]}, call]
    m = model([{"control": "c", "equals": 1, "body": block},
               {"control": "c", "equals": 1, "body": [call, {"invert": [call]}]}], {"c": 1, "x": 3})
    assert np.allclose(reference_unitary(m), np.eye(16), atol=1e-12)
    res = synthesize(m, ConstraintSet(max_width=8), "cx")
    full = sim.restricted_unitary(res.circuit, list(range(4)))
    blockU, leak = sim.project_functional(full, res.circuit.num_qubits, list(range(4)))
    assert sim.equal_up_to_phase(blockU, np.eye(16)) and abs(leak) < 1e-9


@pytest.mark.parametrize("objective", ["cx", "width", "depth"])
def test_verify_circuit_reports_pass(objective):
    m = build_walk_model(3)
    rep = verify_circuit(m, synthesize(m, ConstraintSet(max_width=7), objective).circuit)
    assert rep.passed and rep["max_error"] < 1e-9


def test_verify_circuit_detects_a_wrong_circuit():
    m = build_walk_model(2)
    circuit = synthesize(m).circuit
    circuit.gates.append(Gate("x", (1,)))
    assert not verify_circuit(m, circuit).passed
