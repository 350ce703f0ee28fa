"""Density operators, partial traces, and information metrics.

The pure-state partial trace contracts psi against conj(psi) over the traced
axes directly, so the working set is O(2^n + 4^|keep|) — the full 4^n density
matrix is never formed.  Reduced operators come back with their qubits
relabeled 0..k-1 in ascending order of the original keep indices, which
changes the matrix layout relative to the parent system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import StateVector
from .errors import (
    EmptyKeepSet,
    InputError,
    KeepTooLarge,
    NotPSD,
    OverlappingSets,
    QubitOutOfRange,
    ShapeError,
    TooManyQubits,
)
from .tensor import DenseTensor

MAX_DENSE_RHO_QUBITS = 13
MAX_KEEP_QUBITS = 14
MAX_PURE_TRACE_QUBITS = 26
_HERMITIAN_TOL = 1e-10
_TRACE_TOL = 1e-10
_PSD_TOL = 1e-10
_PSD_CHECK_LIMIT = 8  # eigvalsh on construction only up to this size
_EIG_CLAMP = 1e-12
_NOT_PSD_TOL = 1e-8
_HERMITIAN_BLOCK = 1 << 22  # entries compared per slab


def _hermitian_residual(arr: np.ndarray) -> float:
    """max |arr - arr†|, computed in row slabs.

    A matrix on 14 qubits is 4 GiB; forming arr - arr.conj().T in one shot
    would triple that, so the comparison walks bounded slabs instead.
    """
    dim = arr.shape[0]
    rows = max(1, _HERMITIAN_BLOCK // max(dim, 1))
    worst = 0.0
    for lo in range(0, dim, rows):
        hi = min(dim, lo + rows)
        diff = np.abs(arr[lo:hi, :] - arr[:, lo:hi].conj().T)
        worst = max(worst, float(diff.max()))
    return worst


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, PSD matrix on ``m_qubits`` qubits.

    Hermiticity and trace are always validated; positive semidefiniteness is
    eigen-checked on construction only for m <= 8 (it costs a full
    diagonalization) and re-checked wherever a spectrum is computed anyway.
    """

    m_qubits: int
    matrix: DenseTensor

    def __post_init__(self):
        m = self.m_qubits
        if m < 1:
            raise InputError(f"need at least one qubit, got {m}")
        dim = 2**m
        if self.matrix.shape != (dim, dim):
            raise ShapeError(
                f"matrix shape {self.matrix.shape} does not match m={m}"
            )
        arr = self.matrix.array
        if _hermitian_residual(arr) > _HERMITIAN_TOL:
            raise InputError("matrix is not Hermitian within 1e-10")
        tr = complex(np.trace(arr))
        if abs(tr - 1.0) > _TRACE_TOL:
            raise InputError(f"trace {tr:.12g} is not 1 within 1e-10")
        if m <= _PSD_CHECK_LIMIT:
            lo = float(np.linalg.eigvalsh(arr)[0])
            if lo < -_PSD_TOL:
                raise NotPSD(f"eigenvalue {lo:.3e} below -1e-10")

    @property
    def dim(self) -> int:
        return 2**self.m_qubits


def _check_keep(keep, m: int) -> tuple[int, ...]:
    try:
        idx = [int(q) for q in keep]
    except TypeError:
        idx = [int(keep)]
    if not idx:
        raise EmptyKeepSet("keep set is empty")
    for q in idx:
        if not 0 <= q < m:
            raise QubitOutOfRange(f"keep index {q} out of range for {m} qubits")
    if len(set(idx)) != len(idx):
        raise InputError(f"duplicate keep indices {sorted(idx)}")
    return tuple(sorted(idx))


def density_from_state(state: StateVector) -> DensityOperator:
    """|psi><psi| as an explicit matrix (n <= 13)."""
    n = state.n_qubits
    if n > MAX_DENSE_RHO_QUBITS:
        raise TooManyQubits(
            f"n={n} exceeds the dense density-matrix guard of {MAX_DENSE_RHO_QUBITS}"
        )
    v = state.ravel()
    return DensityOperator(n, DenseTensor(np.outer(v, v.conj())))


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """Trace out every qubit not in ``keep``; output order is ascending keep."""
    m = rho.m_qubits
    kept = _check_keep(keep, m)
    if len(kept) == m:
        return rho
    arr = rho.matrix.array.reshape((2,) * (2 * m))
    keep_set = set(kept)
    labels = list(range(m)) + [m + q if q in keep_set else q for q in range(m)]
    out = [q for q in kept] + [m + q for q in kept]
    reduced = np.einsum(arr, labels, out)
    k = len(kept)
    return DensityOperator(k, DenseTensor(reduced.reshape(2**k, 2**k)))


def partial_trace_pure(state: StateVector, keep) -> DensityOperator:
    """Reduced density matrix straight from the state vector.

    Contracts psi with conj(psi) over the traced axes, so peak memory is
    O(2^n + 4^|keep|) rather than O(4^n); |keep| <= 14, n <= 26.
    """
    n = state.n_qubits
    if n > MAX_PURE_TRACE_QUBITS:
        raise TooManyQubits(f"n={n} exceeds the pure-trace guard")
    kept = _check_keep(keep, n)
    if len(kept) > MAX_KEEP_QUBITS:
        raise KeepTooLarge(
            f"|keep|={len(kept)} exceeds the reduced-matrix guard of {MAX_KEEP_QUBITS}"
        )
    psi = state.amplitudes.array
    traced = [q for q in range(n) if q not in set(kept)]
    if traced:
        reduced = np.tensordot(psi, np.conj(psi), axes=(traced, traced))
    else:
        flat = psi.reshape(-1)
        reduced = np.outer(flat, flat.conj())
    k = len(kept)
    return DensityOperator(k, DenseTensor(reduced.reshape(2**k, 2**k)))


def purity(rho: DensityOperator) -> float:
    """Tr(rho^2); equals the squared Frobenius norm for Hermitian matrices."""
    arr = rho.matrix.array
    return float(np.vdot(arr, arr).real)


def von_neumann_entropy(rho: DensityOperator, bits: bool = False) -> float:
    """-sum(lambda ln lambda) in nats (or bits); eigenvalues below 1e-12
    contribute nothing, below -1e-8 the operator is rejected."""
    w = np.linalg.eigvalsh(rho.matrix.array)
    if float(w[0]) < -_NOT_PSD_TOL:
        raise NotPSD(f"eigenvalue {float(w[0]):.3e} below -1e-8")
    w = w[w >= _EIG_CLAMP]
    s = float(-np.sum(w * np.log(w)))
    if bits:
        s /= float(np.log(2.0))
    return max(s, 0.0)


def mutual_information(state: StateVector, a, b, bits: bool = False) -> float:
    """I(A:B) = S(A) + S(B) - S(AB) on a pure state; A and B disjoint."""
    n = state.n_qubits
    set_a = _check_keep(a, n)
    set_b = _check_keep(b, n)
    if set(set_a) & set(set_b):
        raise OverlappingSets(f"A={set_a} and B={set_b} intersect")
    s_a = von_neumann_entropy(partial_trace_pure(state, set_a), bits=bits)
    s_b = von_neumann_entropy(partial_trace_pure(state, set_b), bits=bits)
    s_ab = von_neumann_entropy(
        partial_trace_pure(state, sorted(set_a + set_b)), bits=bits
    )
    return s_a + s_b - s_ab
