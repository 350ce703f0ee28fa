"""Pauli-sum observables.

A Hamiltonian is a real-weighted sum of Pauli strings, each string a sparse
map from qubit index to one of X, Y, Z (identity elsewhere).  Expectation
values are computed without ever forming the 2^n x 2^n matrix: dense states
get per-term operator application, tensor-train states get transfer-matrix
windows that only touch the sites a term acts on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import StateVector
from .errors import (
    InputError,
    NonHermitianResidue,
    ParseError,
    QubitOutOfRange,
    TooManyQubits,
)
from .tt import TTState, _position_center, canonicalize

PAULI_MATRICES = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

MAX_SPECTRUM_QUBITS = 12
_DENSE_SPECTRUM_QUBITS = 8
RESIDUE_TOL = 1e-8


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string; ``ops`` maps qubit -> 'X'|'Y'|'Z'."""

    coeff: complex
    ops: tuple[tuple[int, str], ...]

    def __post_init__(self):
        coeff = complex(self.coeff)
        if not np.isfinite(coeff.real) or not np.isfinite(coeff.imag):
            raise InputError(f"coefficient {self.coeff!r} is not finite")
        items = tuple(sorted((int(q), str(op)) for q, op in dict(self.ops).items()))
        for q, op in items:
            if q < 0:
                raise QubitOutOfRange(f"negative qubit index {q}")
            if op not in PAULI_MATRICES:
                raise InputError(f"unknown Pauli letter {op!r}")
        if len({q for q, _ in items}) != len(items):
            raise InputError(f"duplicate qubit in term {items}")
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "ops", items)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.ops)


def term(coeff, ops) -> PauliTerm:
    """Convenience constructor; ``ops`` may be a dict {qubit: letter}."""
    return PauliTerm(coeff, tuple(dict(ops).items()))


@dataclass(frozen=True)
class PauliHamiltonian:
    n_qubits: int
    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise InputError(f"need at least one qubit, got {self.n_qubits}")
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not isinstance(t, PauliTerm):
                raise InputError(f"terms must be PauliTerm, got {type(t).__name__}")
            for q, _ in t.ops:
                if q >= self.n_qubits:
                    raise QubitOutOfRange(
                        f"term acts on qubit {q} but n_qubits={self.n_qubits}"
                    )

    def __add__(self, other: "PauliHamiltonian") -> "PauliHamiltonian":
        if other.n_qubits != self.n_qubits:
            raise InputError("cannot add Hamiltonians on different qubit counts")
        return PauliHamiltonian(self.n_qubits, self.terms + other.terms)


def tfim(n_qubits: int, j: float = 1.0, h: float = 1.0, periodic: bool = False):
    """Transverse-field Ising chain  H = -j sum Z_k Z_{k+1} - h sum X_k.

    Open boundaries give 2n-1 terms, periodic 2n (the wrap-around bond).
    """
    n = int(n_qubits)
    if n < 1:
        raise InputError(f"need at least one qubit, got {n}")
    terms = []
    bonds = n if periodic and n > 1 else n - 1
    for k in range(bonds):
        terms.append(term(-float(j), {k: "Z", (k + 1) % n: "Z"}))
    for k in range(n):
        terms.append(term(-float(h), {k: "X"}))
    return PauliHamiltonian(n, tuple(terms))


def _apply_term_dense(arr: np.ndarray, t: PauliTerm) -> np.ndarray:
    out = arr
    for q, op in t.ops:
        out = np.moveaxis(np.tensordot(PAULI_MATRICES[op], out, axes=([1], [q])), 0, q)
    return out


def _expval_dense(state: StateVector, ham: PauliHamiltonian) -> complex:
    psi = state.amplitudes.array
    flat = psi.reshape(-1)
    total = 0.0 + 0.0j
    for t in ham.terms:
        if not t.ops:
            total += t.coeff
            continue
        total += t.coeff * np.vdot(flat, _apply_term_dense(psi, t).reshape(-1))
    return total


def _expval_tt(tt: TTState, ham: PauliHamiltonian) -> complex:
    """Per-term transfer windows over a mixed-canonical copy.

    Terms are evaluated in ascending order of their leftmost site so the
    orthogonality center only ever sweeps rightward, but the final sum runs
    in the original term order.
    """
    if tt.ortho_center is None:
        tt = canonicalize(tt, 0)
    cores = list(tt.cores)
    center = tt.ortho_center
    values = [0j] * len(ham.terms)
    order = sorted(
        range(len(ham.terms)),
        key=lambda i: (ham.terms[i].support[0] if ham.terms[i].ops else 0, i),
    )
    for i in order:
        t = ham.terms[i]
        if not t.ops:
            values[i] = 1.0 + 0j
            continue
        lo, hi = t.support[0], t.support[-1]
        ops = dict(t.ops)
        center = _position_center(cores, center, lo)
        env = np.eye(cores[lo].shape[0], dtype=complex)
        for k in range(lo, hi + 1):
            ket = np.tensordot(env, cores[k], axes=([1], [0]))  # (bra bond, s, r)
            if k in ops:
                ket = np.tensordot(PAULI_MATRICES[ops[k]], ket, axes=([1], [1]))
                ket = ket.transpose(1, 0, 2)
            env = np.tensordot(np.conj(cores[k]), ket, axes=([0, 1], [0, 1]))
        values[i] = np.trace(env)  # right of the window is right-orthogonal
    total = 0.0 + 0.0j
    for t, v in zip(ham.terms, values):
        total += t.coeff * v
    return total


def expval(state, ham: PauliHamiltonian) -> float:
    """<state| H |state> as a real float.

    The imaginary residue of the summed terms stays below 1e-10 for Hermitian
    input; anything above 1e-8 raises NonHermitianResidue.
    """
    if not isinstance(state, (StateVector, TTState)):
        raise InputError(f"unsupported state type {type(state).__name__}")
    if state.n_qubits != ham.n_qubits:
        raise InputError(
            f"state has {state.n_qubits} qubits, Hamiltonian {ham.n_qubits}"
        )
    if isinstance(state, StateVector):
        total = _expval_dense(state, ham)
    else:
        total = _expval_tt(state, ham)
    if abs(total.imag) > RESIDUE_TOL:
        raise NonHermitianResidue(
            f"imaginary residue {total.imag:.3e} exceeds {RESIDUE_TOL:.0e}"
        )
    return float(total.real)


def _sparse_matrix(ham: PauliHamiltonian):
    from scipy import sparse

    n = ham.n_qubits
    eye = sparse.identity(2, format="csr", dtype=complex)
    acc = sparse.csr_matrix((2**n, 2**n), dtype=complex)
    for t in ham.terms:
        ops = dict(t.ops)
        piece = sparse.identity(1, format="csr", dtype=complex)
        for q in range(n):
            factor = sparse.csr_matrix(PAULI_MATRICES[ops[q]]) if q in ops else eye
            piece = sparse.kron(piece, factor, format="csr")
        acc = acc + t.coeff * piece
    return acc


def exact_spectrum_min(ham: PauliHamiltonian) -> float:
    """Lowest eigenvalue, exact to solver precision; n <= 12.

    Small systems are diagonalized densely; larger ones use a Lanczos solve
    with a fixed starting vector so repeated calls agree bit-for-bit.
    """
    n = ham.n_qubits
    if n > MAX_SPECTRUM_QUBITS:
        raise TooManyQubits(f"n={n} exceeds the spectrum guard of {MAX_SPECTRUM_QUBITS}")
    mat = _sparse_matrix(ham)
    if n <= _DENSE_SPECTRUM_QUBITS:
        return float(np.linalg.eigvalsh(mat.toarray())[0])
    from scipy.sparse.linalg import eigsh

    dim = 2**n
    v0 = np.ones(dim) + np.linspace(0.0, 0.5, dim)
    v0 /= np.linalg.norm(v0)
    vals = eigsh(mat, k=1, which="SA", v0=v0, maxiter=5000)[0]
    return float(vals[0])


def hamiltonian_to_dict(ham: PauliHamiltonian) -> dict:
    """JSON form; qubit indices become string keys."""
    return {
        "n_qubits": ham.n_qubits,
        "terms": [
            {"coeff": t.coeff.real, "ops": {str(q): op for q, op in t.ops}}
            for t in ham.terms
        ],
    }


def hamiltonian_from_dict(data: dict) -> PauliHamiltonian:
    if not isinstance(data, dict):
        raise ParseError(f"expected an object, got {type(data).__name__}")
    try:
        n = int(data["n_qubits"])
        raw_terms = data["terms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed Hamiltonian object: {exc}") from exc
    if not isinstance(raw_terms, list):
        raise ParseError("'terms' must be a list")
    terms = []
    for idx, entry in enumerate(raw_terms):
        if not isinstance(entry, dict) or "coeff" not in entry or "ops" not in entry:
            raise ParseError(f"term {idx} must have 'coeff' and 'ops'")
        coeff = entry["coeff"]
        if isinstance(coeff, bool) or not isinstance(coeff, (int, float)):
            raise ParseError(f"term {idx} coefficient must be a real number")
        if not isinstance(entry["ops"], dict):
            raise ParseError(f"term {idx} 'ops' must be an object")
        ops = {}
        for key, op in entry["ops"].items():
            try:
                q = int(key)
            except (TypeError, ValueError):
                raise ParseError(f"term {idx} has non-integer qubit key {key!r}")
            ops[q] = op
        try:
            terms.append(term(float(coeff), ops))
        except InputError as exc:
            raise ParseError(f"term {idx}: {exc}") from exc
    try:
        return PauliHamiltonian(n, tuple(terms))
    except InputError as exc:
        raise ParseError(str(exc)) from exc
