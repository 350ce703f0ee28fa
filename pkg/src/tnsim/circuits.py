"""Gate-level circuit representation and the dense statevector engine.

Conventions (shared by every engine in the package):

* Qubit 0 is the most significant bit of a basis-state index, so the
  amplitude tensor of an ``n``-qubit state has shape ``(2,)*n`` with axis
  ``k`` belonging to qubit ``k`` and row-major flattening giving the usual
  ``|q0 q1 ... q_{n-1}>`` ordering.
* Rotations follow ``R_a(theta) = exp(-i theta sigma_a / 2)``.
* ``Y = [[0, -i], [i, 0]]``; ``crz(theta) = diag(1, 1, e^{-i theta/2},
  e^{+i theta/2})`` with the first wire acting as control.

The dense engine here is the reference oracle for the factorized engines; it
is deliberately simple and capped at 26 qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArityMismatch,
    InputError,
    MissingParam,
    ParamCountMismatch,
    ParseError,
    TooManyQubits,
    UnknownGate,
    WireOutOfRange,
)
from .tensor import DenseTensor

MAX_DENSE_QUBITS = 26
MAX_UNITARY_QUBITS = 10

_SQ2 = 1.0 / math.sqrt(2.0)

_FIXED_MATRICES: dict[str, np.ndarray] = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "t": np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
    "cnot": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}

PARAM_GATES = frozenset({"rx", "ry", "rz", "crz"})
STANDARD_GATES = frozenset(_FIXED_MATRICES) | PARAM_GATES

_ARITY = {name: 1 for name in ("h", "x", "y", "z", "s", "t", "rx", "ry", "rz")}
_ARITY.update({name: 2 for name in ("cnot", "cz", "crz", "swap")})


def _rotation_matrix(name: str, theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    if name == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if name == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "rz":
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    if name == "crz":
        return np.diag([1.0, 1.0, np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    raise UnknownGate(name)


def gate_matrix(name: str, param: float | None = None) -> np.ndarray:
    """Numeric matrix of a standard gate (helper shared with the tapes)."""
    if name in _FIXED_MATRICES:
        return _FIXED_MATRICES[name].copy()
    if name in PARAM_GATES:
        if param is None:
            raise MissingParam(f"gate '{name}' requires a parameter")
        return _rotation_matrix(name, float(param))
    raise UnknownGate(f"unknown gate '{name}'")


def gate_matrix_derivative(name: str, param: float) -> np.ndarray:
    """d(matrix)/d(theta) for the parameterised standard gates."""
    theta = float(param)
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    if name == "rx":
        return 0.5 * np.array([[-s, -1j * c], [-1j * c, -s]])
    if name == "ry":
        return 0.5 * np.array([[-s, -c], [c, -s]], dtype=complex)
    if name == "rz":
        return np.diag([-0.5j * np.exp(-0.5j * theta), 0.5j * np.exp(0.5j * theta)])
    if name == "crz":
        return np.diag(
            [0.0, 0.0, -0.5j * np.exp(-0.5j * theta), 0.5j * np.exp(0.5j * theta)]
        )
    raise UnknownGate(f"gate '{name}' has no parameter derivative")


@dataclass(frozen=True)
class Gate:
    """A gate bound to specific wires.

    ``matrix`` has shape ``2^k x 2^k`` for ``k = len(wires)``; its row/column
    basis orders the wires as given, first wire most significant.
    """

    name: str
    wires: tuple[int, ...]
    matrix: DenseTensor
    param: float | None = None

    def __post_init__(self):
        wires = tuple(int(w) for w in self.wires)
        object.__setattr__(self, "wires", wires)
        if len(set(wires)) != len(wires):
            raise ArityMismatch(f"gate '{self.name}' repeats a wire: {wires}")
        if any(w < 0 for w in wires):
            raise WireOutOfRange(f"negative wire in {wires}")
        dim = 2 ** len(wires)
        if self.matrix.shape != (dim, dim):
            raise ArityMismatch(
                f"gate '{self.name}' on {len(wires)} wires needs a {dim}x{dim} matrix,"
                f" got {self.matrix.shape}"
            )


def validate_unitary(matrix: DenseTensor, tol: float = 1e-10) -> bool:
    """True iff ``matrix`` is unitary: max |U†U - I| <= tol.

    Raises :class:`ShapeError` when the matrix is not square with a
    power-of-two dimension.
    """
    from .errors import ShapeError

    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {matrix.shape}")
    dim = matrix.shape[0]
    if dim & (dim - 1) != 0:
        raise ShapeError(f"dimension {dim} is not a power of two")
    u = matrix.array
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(dim))) <= tol)


def standard_gate(name: str, wires, param: float | None = None) -> Gate:
    """Construct a gate from the standard set.

    ``param`` must be supplied exactly for ``rx``, ``ry``, ``rz`` and ``crz``.
    Two-qubit controlled gates treat the first wire as the control.
    """
    name = str(name)
    if name not in STANDARD_GATES:
        raise UnknownGate(f"unknown gate '{name}'")
    wires = tuple(int(w) for w in (wires if not isinstance(wires, int) else (wires,)))
    if len(wires) != _ARITY[name]:
        raise ArityMismatch(
            f"gate '{name}' acts on {_ARITY[name]} wire(s), got {len(wires)}"
        )
    if name in PARAM_GATES:
        if param is None:
            raise MissingParam(f"gate '{name}' requires a parameter")
        param = float(param)
    elif param is not None:
        raise MissingParam(f"gate '{name}' takes no parameter")
    return Gate(name, wires, DenseTensor(gate_matrix(name, param)), param)


def custom_gate(
    name: str, wires, matrix, *, allow_nonunitary: bool = False, tol: float = 1e-10
) -> Gate:
    """Wrap an explicit matrix as a gate.

    By default the matrix must be unitary; pass ``allow_nonunitary=True`` to
    insert measurement-like operators on purpose.
    """
    m = matrix if isinstance(matrix, DenseTensor) else DenseTensor(matrix)
    if not allow_nonunitary and not validate_unitary(m, tol):
        raise InputError(f"matrix for '{name}' is not unitary within {tol}")
    return Gate(str(name), tuple(int(w) for w in wires), m, None)


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list on a fixed-width register.

    ``trainable`` lists gate positions whose params form the gradient
    vector, in order.
    """

    n_qubits: int
    gates: tuple[Gate, ...]
    trainable: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise InputError(f"n_qubits must be >= 1, got {self.n_qubits}")
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "trainable", tuple(int(i) for i in self.trainable))
        for g in self.gates:
            if max(g.wires) >= self.n_qubits:
                raise WireOutOfRange(
                    f"gate '{g.name}' wires {g.wires} exceed register of {self.n_qubits}"
                )
        seen = set()
        for idx in self.trainable:
            if not 0 <= idx < len(self.gates):
                raise InputError(f"trainable index {idx} out of range")
            if self.gates[idx].param is None:
                raise MissingParam(
                    f"trainable index {idx} refers to '{self.gates[idx].name}' which has no parameter"
                )
            if idx in seen:
                raise InputError(f"trainable index {idx} listed twice")
            seen.add(idx)

    @property
    def n_params(self) -> int:
        return len(self.trainable)

    def params(self) -> np.ndarray:
        """Current values of the trainable parameters, in slot order."""
        return np.array([self.gates[i].param for i in self.trainable], dtype=float)


def with_params(circuit: Circuit, theta) -> Circuit:
    """Return a copy of ``circuit`` with trainable parameters set to ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ParamCountMismatch(
            f"expected {circuit.n_params} parameters, got shape {theta.shape}"
        )
    gates = list(circuit.gates)
    for slot, idx in enumerate(circuit.trainable):
        g = gates[idx]
        gates[idx] = standard_gate(g.name, g.wires, float(theta[slot]))
    return Circuit(circuit.n_qubits, tuple(gates), circuit.trainable)


@dataclass(frozen=True)
class StateVector:
    """Dense pure state; amplitudes have shape ``(2,)*n_qubits``."""

    n_qubits: int
    amplitudes: DenseTensor

    def __post_init__(self):
        if self.amplitudes.shape != (2,) * self.n_qubits:
            raise InputError(
                f"amplitudes shape {self.amplitudes.shape} does not match n={self.n_qubits}"
            )

    def ravel(self) -> np.ndarray:
        """Amplitudes as a flat length-2^n vector (qubit 0 most significant)."""
        return self.amplitudes.array.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.ravel()))


def _check_width(n: int, limit: int = MAX_DENSE_QUBITS) -> int:
    n = int(n)
    if n < 1:
        raise InputError(f"need at least one qubit, got {n}")
    if n > limit:
        raise TooManyQubits(f"{n} qubits exceeds the dense guard of {limit}")
    return n


def zero_state(n_qubits: int) -> StateVector:
    """|00...0> on ``n_qubits`` (n <= 26)."""
    n = _check_width(n_qubits)
    amps = np.zeros((2,) * n, dtype=complex)
    amps[(0,) * n] = 1.0
    return StateVector(n, DenseTensor(amps))


def basis_state(n_qubits: int, index: int) -> StateVector:
    """Computational basis state |index> with qubit 0 as the most significant bit."""
    n = _check_width(n_qubits)
    if not 0 <= index < 2**n:
        raise InputError(f"basis index {index} out of range for n={n}")
    amps = np.zeros(2**n, dtype=complex)
    amps[index] = 1.0
    return StateVector(n, DenseTensor(amps.reshape((2,) * n)))


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-ish random state: normalized complex Gaussian amplitudes."""
    n = _check_width(n_qubits)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    v /= np.linalg.norm(v)
    return StateVector(n, DenseTensor(v.reshape((2,) * n)))


def apply_dense(state: StateVector, gate: Gate) -> StateVector:
    """Apply ``gate`` to ``state``, returning a fresh state.

    Contracts the gate matrix (reshaped to one axis pair per wire) against the
    wire axes, then restores axis order, i.e. (U on wires ⊗ I elsewhere)|ψ⟩.
    """
    n = _check_width(state.n_qubits)
    k = len(gate.wires)
    if any(w >= n for w in gate.wires):
        raise WireOutOfRange(f"gate '{gate.name}' wires {gate.wires} exceed n={n}")
    g = gate.matrix.array.reshape((2,) * (2 * k))
    out = np.tensordot(g, state.amplitudes.array, axes=(tuple(range(k, 2 * k)), gate.wires))
    out = np.moveaxis(out, tuple(range(k)), gate.wires)
    return StateVector(n, DenseTensor(out))


def simulate_dense(circuit: Circuit, state: StateVector | None = None) -> StateVector:
    """Run the whole circuit on the dense engine (default input |0...0>)."""
    psi = zero_state(circuit.n_qubits) if state is None else state
    if psi.n_qubits != circuit.n_qubits:
        raise InputError(
            f"state has {psi.n_qubits} qubits but circuit expects {circuit.n_qubits}"
        )
    for gate in circuit.gates:
        psi = apply_dense(psi, gate)
    return psi


def circuit_unitary(circuit: Circuit) -> DenseTensor:
    """Dense 2^n x 2^n unitary of the whole circuit (n <= 10)."""
    n = _check_width(circuit.n_qubits, MAX_UNITARY_QUBITS)
    dim = 2**n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for gate in circuit.gates:
        k = len(gate.wires)
        g = gate.matrix.array.reshape((2,) * (2 * k))
        u = np.tensordot(g, u, axes=(tuple(range(k, 2 * k)), gate.wires))
        u = np.moveaxis(u, tuple(range(k)), gate.wires)
    return DenseTensor(u.reshape(dim, dim))


# --- JSON serialization -----------------------------------------------------


def circuit_to_dict(circuit: Circuit) -> dict:
    """Serializable form: {"n_qubits":., "gates":[...], "trainable":[...]}."""
    gates = []
    for g in circuit.gates:
        if g.name not in STANDARD_GATES:
            raise UnknownGate(f"gate '{g.name}' is not serializable")
        entry: dict = {"name": g.name, "wires": list(g.wires)}
        if g.param is not None:
            entry["param"] = g.param
        gates.append(entry)
    return {
        "n_qubits": circuit.n_qubits,
        "gates": gates,
        "trainable": list(circuit.trainable),
    }


def circuit_from_dict(data: dict) -> Circuit:
    """Inverse of :func:`circuit_to_dict`; raises ParseError on bad structure."""
    try:
        n = int(data["n_qubits"])
        raw_gates = data["gates"]
        trainable = tuple(int(i) for i in data.get("trainable", ()))
        gates = tuple(
            standard_gate(g["name"], g["wires"], g.get("param")) for g in raw_gates
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed circuit document: {exc!r}") from exc
    return Circuit(n, gates, trainable)
