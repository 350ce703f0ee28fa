import math

import numpy as np
import pytest

from helpers import random_circuit
from tnsim.circuits import (
    Circuit,
    basis_state,
    apply_dense,
    circuit_from_dict,
    circuit_to_dict,
    circuit_unitary,
    custom_gate,
    gate_matrix,
    simulate_dense,
    standard_gate,
    validate_unitary,
    with_params,
    zero_state,
)
from tnsim.errors import (
    ArityMismatch,
    InputError,
    MissingParam,
    ParamCountMismatch,
    ParseError,
    ShapeError,
    TooManyQubits,
    UnknownGate,
    WireOutOfRange,
)
from tnsim.tensor import DenseTensor


def test_h_matrix():
    g = standard_gate("h", [0])
    want = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    assert np.allclose(g.matrix.array, want)


def test_rx_zero_is_identity():
    g = standard_gate("rx", [0], 0.0)
    assert np.allclose(g.matrix.array, np.eye(2))


def test_y_convention():
    g = standard_gate("y", [0])
    assert np.allclose(g.matrix.array, [[0, -1j], [1j, 0]])


def test_crz_convention():
    theta = 0.7
    g = standard_gate("crz", [0, 1], theta)
    want = np.diag([1, 1, np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    assert np.allclose(g.matrix.array, want)


def test_standard_gate_errors():
    with pytest.raises(UnknownGate):
        standard_gate("foo", [0])
    with pytest.raises(ArityMismatch):
        standard_gate("h", [0, 1])
    with pytest.raises(ArityMismatch):
        standard_gate("cnot", [1, 1])
    with pytest.raises(MissingParam):
        standard_gate("rx", [0])
    with pytest.raises(MissingParam):
        standard_gate("h", [0], 0.3)


def test_validate_unitary():
    assert validate_unitary(DenseTensor(np.eye(2)), 1e-10)
    assert not validate_unitary(DenseTensor(np.diag([1.0, 2.0])), 1e-10)
    assert validate_unitary(standard_gate("rx", [0], 0.7).matrix, 1e-10)
    with pytest.raises(ShapeError):
        validate_unitary(DenseTensor(np.ones((2, 3))))
    with pytest.raises(ShapeError):
        validate_unitary(DenseTensor(np.eye(3)))


def test_all_standard_gates_unitary():
    for name in ("h", "x", "y", "z", "s", "t", "cnot", "cz", "swap"):
        wires = [0] if name not in ("cnot", "cz", "swap") else [0, 1]
        assert validate_unitary(standard_gate(name, wires).matrix, 1e-12)
    for name in ("rx", "ry", "rz", "crz"):
        wires = [0] if name != "crz" else [0, 1]
        assert validate_unitary(standard_gate(name, wires, 1.234).matrix, 1e-12)


def test_custom_gate_escape_hatch():
    proj = np.diag([1.0, 0.0])
    with pytest.raises(InputError):
        custom_gate("p0", [0], proj)
    g = custom_gate("p0", [0], proj, allow_nonunitary=True)
    assert np.allclose(g.matrix.array, proj)


def test_h_on_zero():
    psi = apply_dense(zero_state(1), standard_gate("h", [0]))
    assert np.allclose(psi.ravel(), [1 / math.sqrt(2), 1 / math.sqrt(2)])


def test_rx_pi_gives_minus_i_one():
    psi = apply_dense(zero_state(1), standard_gate("rx", [0], math.pi))
    assert np.allclose(psi.ravel(), [0.0, -1j])


def test_cnot_on_basis_states():
    # qubit 0 is the most significant bit and the control
    cnot = standard_gate("cnot", [0, 1])
    psi = apply_dense(basis_state(2, 0b10), cnot)
    assert np.allclose(psi.ravel(), [0, 0, 0, 1])  # |10> -> |11>
    psi = apply_dense(basis_state(2, 0b01), cnot)
    assert np.allclose(psi.ravel(), [0, 1, 0, 0])  # |01> untouched


def test_cnot_reversed_wires():
    # control on qubit 1: |01> -> |11>
    cnot = standard_gate("cnot", [1, 0])
    psi = apply_dense(basis_state(2, 0b01), cnot)
    assert np.allclose(psi.ravel(), [0, 0, 0, 1])


def test_bell_preparation():
    c = Circuit(2, (standard_gate("h", [0]), standard_gate("cnot", [0, 1])))
    psi = simulate_dense(c)
    r = 1 / math.sqrt(2)
    assert np.allclose(psi.ravel(), [r, 0, 0, r])
    u = circuit_unitary(c)
    assert np.allclose(u.array[:, 0], [r, 0, 0, r])


def test_gate_on_middle_wire_of_three():
    # x on qubit 1 of |000> -> |010>
    psi = apply_dense(zero_state(3), standard_gate("x", [1]))
    assert np.allclose(psi.ravel(), np.eye(8)[0b010])


def test_circuit_unitary_empty():
    u = circuit_unitary(Circuit(2, ()))
    assert np.allclose(u.array, np.eye(4))


def test_norm_preserved_random_circuits():
    rng = np.random.default_rng(42)
    for _ in range(5):
        c = random_circuit(rng, 6, 30)
        psi = simulate_dense(c)
        assert psi.norm() == pytest.approx(1.0, abs=1e-12)


def test_apply_dense_matches_circuit_unitary():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        c = random_circuit(rng, n, 15)
        psi = simulate_dense(c)
        u = circuit_unitary(c)
        assert np.max(np.abs(psi.ravel() - u.array[:, 0])) < 1e-10
        assert validate_unitary(u, 1e-9)


def test_rotation_inverse_restores_state():
    rng = np.random.default_rng(3)
    for name in ("rx", "ry", "rz"):
        theta = float(rng.uniform(-3, 3))
        c = random_circuit(rng, 3, 10)
        psi = simulate_dense(c)
        fwd = apply_dense(psi, standard_gate(name, [1], theta))
        back = apply_dense(fwd, standard_gate(name, [1], -theta))
        assert np.max(np.abs(back.ravel() - psi.ravel())) < 1e-12


def test_wire_out_of_range():
    with pytest.raises(WireOutOfRange):
        Circuit(2, (standard_gate("h", [2]),))
    with pytest.raises(WireOutOfRange):
        apply_dense(zero_state(2), standard_gate("h", [5]))


def test_too_many_qubits_guards():
    with pytest.raises(TooManyQubits):
        zero_state(27)
    with pytest.raises(TooManyQubits):
        circuit_unitary(Circuit(11, ()))


def test_trainable_validation():
    g = standard_gate("rx", [0], 0.5)
    h = standard_gate("h", [0])
    with pytest.raises(MissingParam):
        Circuit(1, (g, h), trainable=(1,))
    with pytest.raises(InputError):
        Circuit(1, (g,), trainable=(3,))
    with pytest.raises(InputError):
        Circuit(1, (g,), trainable=(0, 0))


def test_with_params():
    c = Circuit(
        1,
        (standard_gate("rx", [0], 0.1), standard_gate("rz", [0], 0.2)),
        trainable=(0, 1),
    )
    c2 = with_params(c, [1.5, -0.5])
    assert c2.gates[0].param == 1.5
    assert c2.gates[1].param == -0.5
    assert np.allclose(c2.gates[0].matrix.array, gate_matrix("rx", 1.5))
    assert c.gates[0].param == 0.1  # original untouched
    with pytest.raises(ParamCountMismatch):
        with_params(c, [1.0])


def test_json_roundtrip():
    rng = np.random.default_rng(11)
    c = random_circuit(rng, 4, 12, trainable=True)
    d = circuit_to_dict(c)
    c2 = circuit_from_dict(d)
    assert c2.n_qubits == c.n_qubits
    assert c2.trainable == c.trainable
    assert len(c2.gates) == len(c.gates)
    for a, b in zip(c.gates, c2.gates):
        assert (a.name, a.wires, a.param) == (b.name, b.wires, b.param)
        assert np.array_equal(a.matrix.array, b.matrix.array)
    assert circuit_to_dict(c2) == d


def test_circuit_from_dict_malformed():
    with pytest.raises(ParseError):
        circuit_from_dict({"gates": []})
    with pytest.raises(ParseError):
        circuit_from_dict({"n_qubits": 2, "gates": [{"wires": [0]}]})
