"""Tensor-train (matrix-product-state) pure states.

Cores are order-3 arrays ``(chi_left, 2, chi_right)`` with boundary bonds of
extent 1; axis ``k`` of the dense amplitude tensor corresponds to core ``k``
(qubit 0 most significant, as everywhere in the package).  States are
immutable; gate application and compression return new states.

Truncation keeps singular values with ``sigma_i / sigma_max > eps`` up to a
hard cap ``chi_max``, then renormalizes by the retained weight.  ``eps = 0``
keeps everything representable — including exact zeros, so that bond shapes
depend only on the gate sequence, never on parameter values; this is what
makes the straight-through differentiation of the split exact in that mode.
The discarded weight ``sum(cut sigma^2) / sum(all sigma^2)`` accumulates in
the state and lower-bounds fidelity loss.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .circuits import Gate, StateVector
from .errors import (
    InputError,
    SizeMismatch,
    TooManyQubits,
    UnsupportedArity,
    WireOutOfRange,
)
from .tensor import DenseTensor

MAX_DENSE_BRIDGE_QUBITS = 26
DEFAULT_EPS = 1e-12
_RANK_TOL = 1e-14  # relative cutoff used when factorizing dense states


@dataclass(frozen=True)
class TTState:
    """Immutable tensor-train state."""

    n_qubits: int
    cores: tuple[np.ndarray, ...]
    ortho_center: int | None = None
    discarded_weight: float = 0.0

    def __post_init__(self):
        n = self.n_qubits
        if n < 1:
            raise InputError(f"need at least one qubit, got {n}")
        if len(self.cores) != n:
            raise InputError(f"{len(self.cores)} cores for {n} qubits")
        cores = []
        prev = 1
        for k, c in enumerate(self.cores):
            c = np.asarray(c, dtype=np.complex128)
            if c.ndim != 3 or c.shape[1] != 2:
                raise InputError(f"core {k} has shape {c.shape}, expected (chi, 2, chi')")
            if c.shape[0] != prev:
                raise InputError(
                    f"core {k} left bond {c.shape[0]} does not match previous {prev}"
                )
            prev = c.shape[2]
            if c.flags.writeable:
                c = c.copy()
                c.flags.writeable = False
            cores.append(c)
        if prev != 1:
            raise InputError(f"final bond must be 1, got {prev}")
        if self.ortho_center is not None and not 0 <= self.ortho_center < n:
            raise InputError(f"ortho_center {self.ortho_center} out of range")
        object.__setattr__(self, "cores", tuple(cores))

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[2] for c in self.cores)


def tt_zero(n_qubits: int) -> TTState:
    """|00...0> as a bond-1 train."""
    core = np.array([[[1.0 + 0j]], [[0.0 + 0j]]]).reshape(1, 2, 1)
    return TTState(int(n_qubits), tuple(core for _ in range(int(n_qubits))), 0)


def _truncate_spectrum(s: np.ndarray, eps: float, chi_max: int | None):
    """How many singular values to keep, plus discarded weight and rescale."""
    total = float(s @ s)
    if eps > 0.0 and s[0] > 0.0:
        k = int(np.count_nonzero(s > eps * s[0]))
        k = max(k, 1)
    else:
        k = len(s)
    if chi_max is not None:
        k = min(k, int(chi_max))
    kept = float(s[:k] @ s[:k])
    if total <= 0.0:
        return max(k, 1), 0.0, 1.0
    discarded = max(0.0, 1.0 - kept / total)
    rescale = float(np.sqrt(total / kept)) if kept > 0.0 else 1.0
    return k, discarded, rescale


def _split_matrix(theta: np.ndarray, eps: float, chi_max: int | None):
    """SVD split of ``theta``; sigma goes right when m <= n, else left.

    Returns ``(left, right, discarded, center_on_right)``.  Keeping the
    unitary factor on the thin side means that with ``eps = 0`` and no cap the
    retained factor is square, which the gradient tape relies on.
    """
    u, s, vh = np.linalg.svd(theta, full_matrices=False)
    k, discarded, rescale = _truncate_spectrum(s, eps, chi_max)
    sk = s[:k] * rescale
    if theta.shape[0] <= theta.shape[1]:
        return u[:, :k], sk[:, None] * vh[:k], discarded, True
    return u[:, :k] * sk[None, :], vh[:k], discarded, False


def _shift_center_right(cores: list[np.ndarray], c: int) -> None:
    chi_l, _, chi_r = cores[c].shape
    q, r = np.linalg.qr(cores[c].reshape(chi_l * 2, chi_r))
    cores[c] = q.reshape(chi_l, 2, q.shape[1])
    cores[c + 1] = np.tensordot(r, cores[c + 1], axes=([1], [0]))


def _shift_center_left(cores: list[np.ndarray], c: int) -> None:
    chi_l, _, chi_r = cores[c].shape
    q, r = np.linalg.qr(cores[c].reshape(chi_l, 2 * chi_r).T)
    cores[c] = q.T.reshape(q.shape[1], 2, chi_r)
    cores[c - 1] = np.tensordot(cores[c - 1], r.T, axes=([2], [0]))


def canonicalize(tt: TTState, center: int) -> TTState:
    """Gauge the train so ``center`` holds the norm and the rest is isometric."""
    n = tt.n_qubits
    center = int(center)
    if not 0 <= center < n:
        raise InputError(f"center {center} out of range for n={n}")
    cores = [c.copy() for c in tt.cores]
    for c in range(center):
        _shift_center_right(cores, c)
    for c in range(n - 1, center, -1):
        _shift_center_left(cores, c)
    return TTState(n, tuple(cores), center, tt.discarded_weight)


def _position_center(cores: list[np.ndarray], center: int | None, target: int) -> int:
    """Move a known center to ``target`` by local QR steps; sweep if unknown."""
    n = len(cores)
    if center is None:
        for c in range(target):
            _shift_center_right(cores, c)
        for c in range(n - 1, target, -1):
            _shift_center_left(cores, c)
        return target
    while center < target:
        _shift_center_right(cores, center)
        center += 1
    while center > target:
        _shift_center_left(cores, center)
        center -= 1
    return center


def _apply_single(cores: list[np.ndarray], k: int, matrix: np.ndarray) -> None:
    cores[k] = np.tensordot(matrix, cores[k], axes=([1], [1])).transpose(1, 0, 2)


def _apply_adjacent(
    cores: list[np.ndarray], i: int, matrix4: np.ndarray, eps: float, chi_max
):
    """Two-qubit gate on sites (i, i+1); returns (new_center, discarded)."""
    theta = np.tensordot(cores[i], cores[i + 1], axes=([2], [0]))  # (l, s0, s1, r)
    g = matrix4.reshape(2, 2, 2, 2)
    theta = np.tensordot(g, theta, axes=([2, 3], [1, 2]))  # (s0', s1', l, r)
    theta = theta.transpose(2, 0, 1, 3)
    chi_l, _, _, chi_r = theta.shape
    left, right, discarded, center_right = _split_matrix(
        theta.reshape(chi_l * 2, 2 * chi_r), eps, chi_max
    )
    k = left.shape[1]
    cores[i] = left.reshape(chi_l, 2, k)
    cores[i + 1] = right.reshape(k, 2, chi_r)
    return (i + 1 if center_right else i), discarded


def apply_gate_tt(
    tt: TTState, gate: Gate, eps: float = DEFAULT_EPS, chi_max: int | None = None
) -> TTState:
    """Apply a one- or two-qubit gate, truncating new bonds by (eps, chi_max).

    The orthogonality center is first moved onto the gate's site so each SVD
    truncation is locally optimal; non-adjacent two-qubit gates are realized
    by a deterministic chain of SWAPs to adjacency and back (each SWAP subject
    to the same truncation).
    """
    n = tt.n_qubits
    wires = gate.wires
    if len(wires) > 2:
        raise UnsupportedArity(
            f"TT engine handles 1- and 2-qubit gates, got {len(wires)} wires"
        )
    if any(not 0 <= w < n for w in wires):
        raise WireOutOfRange(f"gate '{gate.name}' wires {wires} exceed n={n}")
    cores = list(tt.cores)
    center = tt.ortho_center
    total_discarded = tt.discarded_weight

    if len(wires) == 1:
        k = wires[0]
        if center is not None:
            center = _position_center(cores, center, k)
        _apply_single(cores, k, gate.matrix.array)
        return TTState(n, tuple(cores), center, total_discarded)

    lo, hi = min(wires), max(wires)
    g = gate.matrix.array
    if wires[0] > wires[1]:  # matrix axes follow the wire order; flip to sites
        g = g.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    swap = np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    )

    def adjacent(site: int, mat: np.ndarray) -> None:
        nonlocal center, total_discarded
        center = _position_center(cores, center, site)
        center, d = _apply_adjacent(cores, site, mat, eps, chi_max)
        total_discarded += d

    for j in range(hi - 1, lo, -1):  # bring site hi next to lo
        adjacent(j, swap)
    adjacent(lo, g)
    for j in range(lo + 1, hi):  # undo the swaps
        adjacent(j, swap)
    return TTState(n, tuple(cores), center, total_discarded)


def simulate_tt(
    circuit, eps: float = DEFAULT_EPS, chi_max: int | None = None
) -> TTState:
    """Run a circuit on |0...0> with the TT engine."""
    state = tt_zero(circuit.n_qubits)
    for gate in circuit.gates:
        state = apply_gate_tt(state, gate, eps=eps, chi_max=chi_max)
    return state


def tt_inner(a: TTState, b: TTState) -> complex:
    """<a|b> by transfer contraction; O(n chi^3), never a dense vector."""
    if a.n_qubits != b.n_qubits:
        raise SizeMismatch(f"{a.n_qubits} vs {b.n_qubits} qubits")
    env = np.ones((1, 1), dtype=complex)
    for ca, cb in zip(a.cores, b.cores):
        env = np.tensordot(env, np.conj(ca), axes=([0], [0]))  # (b, s, a')
        env = np.tensordot(env, cb, axes=([0, 1], [0, 1]))  # (a', b')
    return complex(env[0, 0])


def tt_norm(tt: TTState) -> float:
    return float(np.sqrt(abs(tt_inner(tt, tt).real)))


def tt_from_dense(state: StateVector, chi_max: int | None = None) -> TTState:
    """Successive-SVD factorization of a dense state.

    Without ``chi_max`` the factorization is numerically exact and the bond
    dimensions equal the Schmidt ranks across each cut (singular values below
    relative 1e-14 count as zero).
    """
    n = state.n_qubits
    if n > MAX_DENSE_BRIDGE_QUBITS:
        raise TooManyQubits(f"n={n} exceeds the dense bridge guard")
    rest = state.amplitudes.array.reshape(1, -1)
    cores = []
    discarded = 0.0
    chi = 1
    for k in range(n - 1):
        theta = rest.reshape(chi * 2, -1)
        u, s, vh = np.linalg.svd(theta, full_matrices=False)
        kk, d, rescale = _truncate_spectrum(s, _RANK_TOL, chi_max)
        discarded += d
        cores.append(u[:, :kk].reshape(chi, 2, kk))
        rest = (s[:kk, None] * rescale) * vh[:kk]
        chi = kk
    cores.append(rest.reshape(chi, 2, 1))
    return TTState(n, tuple(cores), n - 1, discarded)


def tt_to_dense(tt: TTState) -> StateVector:
    """Contract the train back into a dense state (n <= 26)."""
    n = tt.n_qubits
    if n > MAX_DENSE_BRIDGE_QUBITS:
        raise TooManyQubits(f"n={n} exceeds the dense bridge guard")
    acc = tt.cores[0].reshape(2, -1)
    for core in tt.cores[1:]:
        acc = np.tensordot(acc, core, axes=([-1], [0]))
    return StateVector(n, DenseTensor(acc.reshape((2,) * n)))


def compress(tt: TTState, eps: float, chi_max: int | None = None) -> TTState:
    """Re-truncate every bond: orthogonalize left-to-right, then sweep back
    applying SVD truncation cut by cut, renormalizing the retained weight."""
    if eps < 0:
        raise InputError(f"eps must be >= 0, got {eps}")
    if chi_max is not None and chi_max < 1:
        raise InputError(f"chi_max must be >= 1, got {chi_max}")
    n = tt.n_qubits
    cores = [c.copy() for c in tt.cores]
    for c in range(n - 1):
        _shift_center_right(cores, c)
    discarded = 0.0
    for c in range(n - 1, 0, -1):
        chi_l, _, chi_r = cores[c].shape
        u, s, vh = np.linalg.svd(cores[c].reshape(chi_l, 2 * chi_r), full_matrices=False)
        k, d, rescale = _truncate_spectrum(s, eps, chi_max)
        discarded += d
        cores[c] = vh[:k].reshape(k, 2, chi_r)
        cores[c - 1] = np.tensordot(
            cores[c - 1], u[:, :k] * (s[:k] * rescale)[None, :], axes=([2], [0])
        )
    return TTState(n, tuple(cores), 0, tt.discarded_weight + discarded)


def fidelity_dense(tt: TTState, state: StateVector) -> float:
    """|<tt|state>|^2 via the dense bridge (testing helper, n <= 26)."""
    other = tt_from_dense(state)
    return float(abs(tt_inner(tt, other)) ** 2)
