"""Reverse-mode differentiation of expectation values.

Gradients flow through an explicit tape of primitive tensor operations.  The
differentiation variables are the real gate angles only; internally the tape
propagates conjugate-linear sensitivities of the (real) output, so for a node
value ``z`` the cotangent ``g`` satisfies ``dL = Re(sum(conj(g) * dz))``.

The tensor-train engine splits two-qubit updates with an SVD whose unitary
factor (always the one on the thin side, hence square when nothing is
truncated) is recorded as a constant.  With ``eps=0`` and no bond cap this is
an exact rewriting of the forward computation, so gradients are exact; under
truncation the projector is treated as locally constant (straight-through)
and gradients are best-effort.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import (
    MAX_DENSE_QUBITS,
    Circuit,
    gate_matrix,
    gate_matrix_derivative,
    simulate_dense,
    with_params,
    zero_state,
)
from .errors import (
    DivergenceDetected,
    InputError,
    ParamCountMismatch,
    TooManyQubits,
    UnsupportedGateForShift,
    WireOutOfRange,
)
from .hamiltonians import PAULI_MATRICES, PauliHamiltonian, expval
from .tt import _truncate_spectrum, simulate_tt

SHIFTABLE_GATES = ("rx", "ry", "rz", "crz")

_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


# ---------------------------------------------------------------------------
# tape


@dataclass
class _Node:
    op: str
    value: np.ndarray
    parents: tuple[int, ...]
    aux: tuple = ()


def _tensordot_vjp(g, a, b, ax_a, ax_b):
    """Cotangents of ``tensordot(a, b, (ax_a, ax_b))`` under the
    Re(conj(g)*dz) convention."""
    a_free = [i for i in range(a.ndim) if i not in set(ax_a)]
    b_free = [i for i in range(b.ndim) if i not in set(ax_b)]
    # d/da: contract g with conj(b) over b's free axes.  tensordot leaves the
    # contracted partner axes in ascending order, so map them back through
    # the pairing ax_a[s] <-> ax_b[s].
    ga_raw = np.tensordot(g, np.conj(b), axes=(list(range(len(a_free), g.ndim)), b_free))
    sorted_ax_b = sorted(ax_b)
    src = [0] * a.ndim
    for r, p in enumerate(a_free):
        src[p] = r
    for s, p in enumerate(ax_a):
        src[p] = len(a_free) + sorted_ax_b.index(ax_b[s])
    g_a = ga_raw.transpose(src)
    # d/db: contract conj(a) with g over a's free axes.
    gb_raw = np.tensordot(np.conj(a), g, axes=(a_free, list(range(len(a_free)))))
    sorted_ax_a = sorted(ax_a)
    src = [0] * b.ndim
    for s, p in enumerate(ax_b):
        src[p] = sorted_ax_a.index(ax_a[s])
    for r, p in enumerate(b_free):
        src[p] = len(ax_a) + r
    g_b = gb_raw.transpose(src)
    return g_a, g_b


class GradTape:
    """Ordered record of primitive operations; one tape per evaluation.

    Node ids are ints in topological (append) order, so the reverse sweep
    visits each node exactly once.  ``param_bindings`` maps leaf node ids to
    (trainable slot, matrix derivative) for the final chain-rule step onto
    the real angles.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self.param_bindings: dict[int, tuple[int, np.ndarray]] = {}

    def _push(self, op, value, parents, aux=()) -> int:
        self.nodes.append(_Node(op, np.asarray(value), tuple(parents), aux))
        return len(self.nodes) - 1

    def value(self, nid: int) -> np.ndarray:
        return self.nodes[nid].value

    def const(self, value) -> int:
        return self._push("const", np.asarray(value, dtype=complex), ())

    def leaf(self, value, slot: int, dmat: np.ndarray) -> int:
        nid = self._push("leaf", np.asarray(value, dtype=complex), ())
        self.param_bindings[nid] = (slot, np.asarray(dmat, dtype=complex))
        return nid

    def tensordot(self, a: int, b: int, axes) -> int:
        ax_a, ax_b = tuple(axes[0]), tuple(axes[1])
        out = np.tensordot(self.value(a), self.value(b), axes=(ax_a, ax_b))
        return self._push("tensordot", out, (a, b), (ax_a, ax_b))

    def conj(self, a: int) -> int:
        return self._push("conj", np.conj(self.value(a)), (a,))

    def transpose(self, a: int, perm) -> int:
        perm = tuple(perm)
        return self._push("transpose", self.value(a).transpose(perm), (a,), (perm,))

    def reshape(self, a: int, shape) -> int:
        shape = tuple(shape)
        return self._push("reshape", self.value(a).reshape(shape), (a,), (shape,))

    def add(self, a: int, b: int) -> int:
        return self._push("add", self.value(a) + self.value(b), (a, b))

    def scale(self, a: int, c: complex) -> int:
        c = complex(c)
        return self._push("scale", c * self.value(a), (a,), (c,))

    def inner(self, a: int, b: int) -> int:
        out = np.vdot(self.value(a), self.value(b))
        return self._push("inner", np.asarray(out), (a, b))

    def mul(self, a: int, b: int) -> int:
        return self._push("mul", self.value(a) * self.value(b), (a, b))

    def tanh(self, a: int) -> int:
        return self._push("tanh", np.tanh(self.value(a)), (a,))

    def real(self, a: int) -> int:
        return self._push("real", np.asarray(self.value(a).real), (a,))

    # -- execution ---------------------------------------------------------

    def replay(self) -> float:
        """Recompute every node from its parents; returns the largest
        deviation from the recorded values (0.0 for a healthy tape)."""
        worst = 0.0
        vals: list[np.ndarray] = []
        for node in self.nodes:
            p = [vals[i] for i in node.parents]
            if node.op in ("const", "leaf"):
                out = node.value
            elif node.op == "tensordot":
                out = np.tensordot(p[0], p[1], axes=node.aux)
            elif node.op == "conj":
                out = np.conj(p[0])
            elif node.op == "transpose":
                out = p[0].transpose(node.aux[0])
            elif node.op == "reshape":
                out = p[0].reshape(node.aux[0])
            elif node.op == "add":
                out = p[0] + p[1]
            elif node.op == "scale":
                out = node.aux[0] * p[0]
            elif node.op == "inner":
                out = np.asarray(np.vdot(p[0], p[1]))
            elif node.op == "mul":
                out = p[0] * p[1]
            elif node.op == "tanh":
                out = np.tanh(p[0])
            elif node.op == "real":
                out = np.asarray(p[0].real)
            else:  # pragma: no cover
                raise InputError(f"unknown tape op {node.op!r}")
            vals.append(out)
            worst = max(worst, float(np.max(np.abs(out - node.value), initial=0.0)))
        return worst

    def backward(self, out_id: int, n_slots: int) -> np.ndarray:
        """Reverse sweep from ``out_id``; returns d(out)/d(theta) per slot."""
        cotangents: dict[int, np.ndarray] = {out_id: np.asarray(1.0 + 0.0j)}
        grads = np.zeros(n_slots)

        def send(nid, val):
            if self.nodes[nid].op == "const":
                return
            if nid in cotangents:
                cotangents[nid] = cotangents[nid] + val
            else:
                cotangents[nid] = val

        for nid in range(out_id, -1, -1):
            g = cotangents.pop(nid, None)
            if g is None:
                continue
            node = self.nodes[nid]
            if node.op == "const":
                continue
            if node.op == "leaf":
                slot, dmat = self.param_bindings[nid]
                grads[slot] += float(np.sum(np.conj(g) * dmat).real)
                continue
            a = node.parents[0]
            if node.op == "tensordot":
                b = node.parents[1]
                g_a, g_b = _tensordot_vjp(
                    g, self.value(a), self.value(b), node.aux[0], node.aux[1]
                )
                send(a, g_a)
                send(b, g_b)
            elif node.op == "conj":
                send(a, np.conj(g))
            elif node.op == "transpose":
                send(a, g.transpose(np.argsort(node.aux[0])))
            elif node.op == "reshape":
                send(a, g.reshape(self.value(a).shape))
            elif node.op == "add":
                send(a, g)
                send(node.parents[1], g)
            elif node.op == "scale":
                send(a, np.conj(node.aux[0]) * g)
            elif node.op == "inner":
                b = node.parents[1]
                send(a, np.conj(g) * self.value(b))
                send(b, g * self.value(a))
            elif node.op == "mul":
                b = node.parents[1]
                send(a, g * np.conj(self.value(b)))
                send(b, g * np.conj(self.value(a)))
            elif node.op == "tanh":
                send(a, g * np.conj(1.0 - node.value * node.value))
            elif node.op == "real":
                send(a, np.asarray(complex(g.real)))
            else:  # pragma: no cover
                raise InputError(f"unknown tape op {node.op!r}")
        return grads


# ---------------------------------------------------------------------------
# taped circuit engines


def _moveaxis_perm(ndim, sources, dests):
    """Permutation tuple equivalent to np.moveaxis(x, sources, dests)."""
    perm = [None] * ndim
    rest = [ax for ax in range(ndim) if ax not in set(sources)]
    for src, dst in zip(sources, dests):
        perm[dst] = src
    it = iter(rest)
    for i in range(ndim):
        if perm[i] is None:
            perm[i] = next(it)
    return tuple(perm)


def _gate_nodes(tape, circuit, theta):
    """Matrix node per gate: leaves for trainable slots, consts otherwise."""
    slot_of = {gidx: s for s, gidx in enumerate(circuit.trainable)}
    out = []
    for idx, gate in enumerate(circuit.gates):
        if idx in slot_of:
            s = slot_of[idx]
            out.append(
                tape.leaf(
                    gate_matrix(gate.name, float(theta[s])),
                    s,
                    gate_matrix_derivative(gate.name, float(theta[s])),
                )
            )
        else:
            out.append(tape.const(gate.matrix.array))
    return out


def _dense_taped_state(tape, circuit, theta):
    n = circuit.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise TooManyQubits(f"n={n} exceeds the dense guard for the dense engine")
    psi0 = np.zeros((2,) * n, dtype=complex)
    psi0[(0,) * n] = 1.0
    psi = tape.const(psi0)
    mats = _gate_nodes(tape, circuit, theta)
    for gate, mid in zip(circuit.gates, mats):
        k = len(gate.wires)
        gr = tape.reshape(mid, (2,) * (2 * k))
        psi = tape.tensordot(gr, psi, (list(range(k, 2 * k)), list(gate.wires)))
        psi = tape.transpose(psi, _moveaxis_perm(n, list(range(k)), list(gate.wires)))
    return psi


def _dense_term_nodes(tape, psi, op_groups):
    n = tape.value(psi).ndim
    out = []
    for ops in op_groups:
        phi = psi
        for q, op in sorted(ops.items()):
            p = tape.const(PAULI_MATRICES[op])
            phi = tape.tensordot(p, phi, ([1], [q]))
            phi = tape.transpose(phi, _moveaxis_perm(n, [0], [q]))
        out.append(tape.inner(psi, phi))
    return out


def _tt_taped_split(tape, cores, i, g4node, eps, chi_max):
    """Apply a two-site gate node at (i, i+1) and SVD-split the result."""
    theta = tape.tensordot(cores[i], cores[i + 1], ([2], [0]))  # (l, s0, s1, r)
    theta = tape.tensordot(g4node, theta, ([2, 3], [1, 2]))  # (s0', s1', l, r)
    theta = tape.transpose(theta, (2, 0, 1, 3))
    chi_l, _, _, chi_r = tape.value(theta).shape
    m, n = chi_l * 2, 2 * chi_r
    mat = tape.reshape(theta, (m, n))
    u, s, vh = np.linalg.svd(tape.value(mat), full_matrices=False)
    k, _, rescale = _truncate_spectrum(s, eps, chi_max)
    if m <= n:
        left = tape.const(u[:, :k])
        right = tape.tensordot(tape.const(u[:, :k].conj().T), mat, ([1], [0]))
        if rescale != 1.0:
            right = tape.scale(right, rescale)
    else:
        right = tape.const(vh[:k])
        left = tape.tensordot(mat, tape.const(vh[:k].conj().T), ([1], [0]))
        if rescale != 1.0:
            left = tape.scale(left, rescale)
    cores[i] = tape.reshape(left, (chi_l, 2, k))
    cores[i + 1] = tape.reshape(right, (k, 2, chi_r))


def _tt_taped_state(tape, circuit, theta, eps, chi_max):
    n = circuit.n_qubits
    zero_core = np.zeros((1, 2, 1), dtype=complex)
    zero_core[0, 0, 0] = 1.0
    cores = [tape.const(zero_core) for _ in range(n)]
    mats = _gate_nodes(tape, circuit, theta)
    swap4 = None
    for gate, mid in zip(circuit.gates, mats):
        if len(gate.wires) == 1:
            k = gate.wires[0]
            t = tape.tensordot(mid, cores[k], ([1], [1]))  # (s', l, r)
            cores[k] = tape.transpose(t, (1, 0, 2))
            continue
        lo, hi = min(gate.wires), max(gate.wires)
        g4 = tape.reshape(mid, (2, 2, 2, 2))
        if gate.wires[0] > gate.wires[1]:
            g4 = tape.transpose(g4, (1, 0, 3, 2))
        if hi > lo + 1 and swap4 is None:
            swap4 = tape.reshape(tape.const(_SWAP), (2, 2, 2, 2))
        for j in range(hi - 1, lo, -1):
            _tt_taped_split(tape, cores, j, swap4, eps, chi_max)
        _tt_taped_split(tape, cores, lo, g4, eps, chi_max)
        for j in range(lo + 1, hi):
            _tt_taped_split(tape, cores, j, swap4, eps, chi_max)
    return cores


def _tt_term_nodes(tape, cores, op_groups):
    # Shared transfer environments; each term only contracts its own window.
    n = len(cores)
    conj_cores = [tape.conj(c) for c in cores]
    left = [tape.const(np.ones((1, 1), dtype=complex))]
    for k in range(n):
        t = tape.tensordot(left[k], conj_cores[k], ([0], [0]))  # (ket, s, b')
        left.append(tape.tensordot(t, cores[k], ([0, 1], [0, 1])))
    right = [None] * (n + 1)
    right[n] = tape.const(np.ones((1, 1), dtype=complex))
    for k in range(n - 1, -1, -1):
        t = tape.tensordot(conj_cores[k], right[k + 1], ([2], [0]))  # (b, s, k')
        right[k] = tape.tensordot(t, cores[k], ([1, 2], [1, 2]))
    op_cache: dict[tuple[int, str], int] = {}

    def op_core(k, letter):
        key = (k, letter)
        if key not in op_cache:
            p = tape.const(PAULI_MATRICES[letter])
            t = tape.tensordot(p, cores[k], ([1], [1]))
            op_cache[key] = tape.transpose(t, (1, 0, 2))
        return op_cache[key]

    out = []
    for ops in op_groups:
        if not ops:
            out.append(tape.reshape(left[n], ()))  # <psi|psi>
            continue
        sites = sorted(ops)
        lo, hi = sites[0], sites[-1]
        env = left[lo]
        for k in range(lo, hi + 1):
            ket = op_core(k, ops[k]) if k in ops else cores[k]
            step = tape.tensordot(env, conj_cores[k], ([0], [0]))
            env = tape.tensordot(step, ket, ([0, 1], [0, 1]))
        out.append(tape.tensordot(env, right[hi + 1], ([0, 1], [0, 1])))
    return out


def taped_expectations(tape, circuit, theta, op_groups, engine="dense", eps=0.0, chi_max=None):
    """Record one circuit run and return node ids for several Pauli-string
    expectation values of the final state.

    ``op_groups`` is a sequence of ``{qubit: letter}`` dicts; an empty dict
    yields the squared norm.  The returned nodes are complex scalars sharing
    a single simulated state, so one backward pass covers any function built
    on top of all of them.
    """
    theta = _check_theta(circuit, theta)
    for ops in op_groups:
        for q, letter in ops.items():
            if letter not in PAULI_MATRICES:
                raise InputError(f"unknown Pauli letter {letter!r}")
            if not 0 <= q < circuit.n_qubits:
                raise WireOutOfRange(f"qubit {q} outside 0..{circuit.n_qubits - 1}")
    if _check_engine(engine) == "dense":
        psi = _dense_taped_state(tape, circuit, theta)
        return _dense_term_nodes(tape, psi, op_groups)
    cores = _tt_taped_state(tape, circuit, theta, eps, chi_max)
    return _tt_term_nodes(tape, cores, op_groups)


def _taped_expval_output(tape, circuit, theta, ham, engine, eps, chi_max):
    groups = [dict(t.ops) for t in ham.terms]
    if engine == "dense":
        psi = _dense_taped_state(tape, circuit, theta)
        vals = _dense_term_nodes(tape, psi, groups)
    else:
        cores = _tt_taped_state(tape, circuit, theta, eps, chi_max)
        vals = _tt_term_nodes(tape, cores, groups)
    acc = None
    for t, vid in zip(ham.terms, vals):
        v = tape.scale(vid, complex(t.coeff))
        acc = v if acc is None else tape.add(acc, v)
    if acc is None:
        acc = tape.const(np.asarray(0.0 + 0.0j))
    return tape.real(acc)


def _check_theta(circuit: Circuit, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if len(theta) != circuit.n_params:
        raise ParamCountMismatch(
            f"{len(theta)} parameters supplied, circuit has {circuit.n_params} slots"
        )
    if theta.size and not np.all(np.isfinite(theta)):
        raise InputError("parameters must be finite")
    return theta


def _check_engine(engine: str) -> str:
    if engine not in ("dense", "tt"):
        raise InputError(f"unknown engine {engine!r}; expected 'dense' or 'tt'")
    return engine


def build_tape(circuit, ham, theta, engine="dense", eps=0.0, chi_max=None):
    """Record one taped evaluation; returns (tape, output node id)."""
    theta = _check_theta(circuit, theta)
    tape = GradTape()
    engine = _check_engine(engine)
    out = _taped_expval_output(tape, circuit, theta, ham, engine, eps, chi_max)
    return tape, out


def grad_expval(
    circuit: Circuit,
    ham: PauliHamiltonian,
    theta,
    engine: str = "dense",
    eps: float = 0.0,
    chi_max: int | None = None,
):
    """Value and gradient of <H> with respect to the trainable angles.

    Exact for the dense engine and for the TT engine at eps=0 with no bond
    cap; under truncation the TT gradient is the straight-through estimate.
    """
    tape, out = build_tape(circuit, ham, theta, engine, eps, chi_max)
    value = float(tape.value(out))
    grad = tape.backward(out, circuit.n_params)
    return value, grad


def evaluate_expval(
    circuit: Circuit,
    ham: PauliHamiltonian,
    theta=None,
    engine: str = "dense",
    eps: float = 0.0,
    chi_max: int | None = None,
) -> float:
    """Untaped <H> at the given angles (the forward-only path)."""
    _check_engine(engine)
    bound = circuit if theta is None else with_params(circuit, _check_theta(circuit, theta))
    if engine == "dense":
        return expval(simulate_dense(bound, zero_state(circuit.n_qubits)), ham)
    return expval(simulate_tt(bound, eps=eps, chi_max=chi_max), ham)


# ---------------------------------------------------------------------------
# independent gradient oracles

# two-frequency shift weights for the controlled rotation (frequencies 1/2, 1)
_CRZ_Y1 = (np.sqrt(2.0) + 1.0) / (4.0 * np.sqrt(2.0))
_CRZ_Y2 = (np.sqrt(2.0) - 1.0) / (4.0 * np.sqrt(2.0))


def parameter_shift_grad(
    circuit: Circuit,
    ham: PauliHamiltonian,
    theta,
    engine: str = "dense",
    eps: float = 0.0,
    chi_max: int | None = None,
) -> np.ndarray:
    """Exact shift-rule gradient.

    Single-qubit rotations use the two-term rule at +-pi/2.  The controlled
    rotation carries two frequencies (1/2 and 1), so it gets the exact
    four-term rule instead; the plain two-term formula is biased there.
    """
    theta = _check_theta(circuit, theta)
    names = [circuit.gates[g].name for g in circuit.trainable]
    for name in names:
        if name not in SHIFTABLE_GATES:
            raise UnsupportedGateForShift(f"no shift rule for gate {name!r}")

    def e(t):
        return evaluate_expval(circuit, ham, t, engine, eps, chi_max)

    grad = np.zeros(len(theta))
    for k, name in enumerate(names):
        def shifted(delta, k=k):
            t = theta.copy()
            t[k] += delta
            return e(t)

        if name == "crz":
            grad[k] = _CRZ_Y1 * (shifted(np.pi / 2) - shifted(-np.pi / 2)) - _CRZ_Y2 * (
                shifted(3 * np.pi / 2) - shifted(-3 * np.pi / 2)
            )
        else:
            grad[k] = 0.5 * (shifted(np.pi / 2) - shifted(-np.pi / 2))
    return grad


def finite_diff_grad(
    circuit: Circuit,
    ham: PauliHamiltonian,
    theta,
    step: float = 1e-5,
    engine: str = "dense",
    eps: float = 0.0,
    chi_max: int | None = None,
) -> np.ndarray:
    """Central finite differences, coordinate by coordinate."""
    if step <= 0:
        raise InputError(f"step must be positive, got {step}")
    theta = _check_theta(circuit, theta)
    grad = np.zeros(len(theta))
    for k in range(len(theta)):
        up = theta.copy()
        dn = theta.copy()
        up[k] += step
        dn[k] -= step
        grad[k] = (
            evaluate_expval(circuit, ham, up, engine, eps, chi_max)
            - evaluate_expval(circuit, ham, dn, engine, eps, chi_max)
        ) / (2 * step)
    return grad


# ---------------------------------------------------------------------------
# optimization


@dataclass(frozen=True)
class MinimizeStep:
    iteration: int
    theta: np.ndarray
    value: float
    grad_norm: float


@dataclass(frozen=True)
class MinimizeResult:
    steps: tuple[MinimizeStep, ...]
    converged: bool

    @property
    def theta(self) -> np.ndarray:
        return self.steps[-1].theta

    @property
    def value(self) -> float:
        return self.steps[-1].value

    @property
    def n_iters(self) -> int:
        return self.steps[-1].iteration


def init_params(n_params: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform angles in [-pi, pi)."""
    return rng.uniform(-np.pi, np.pi, size=int(n_params))


def minimize(
    fun,
    theta0,
    optimizer: str = "gd",
    rate: float = 0.05,
    max_iters: int = 200,
    tol: float = 1e-8,
    betas: tuple[float, float] = (0.9, 0.999),
    adam_eps: float = 1e-8,
) -> MinimizeResult:
    """Fixed-rate descent on ``fun(theta) -> (value, grad)``.

    Records every iterate; stops when the gradient norm drops below ``tol``
    or after ``max_iters`` updates.  NaN/Inf values abort with
    DivergenceDetected.
    """
    if optimizer not in ("gd", "adam"):
        raise InputError(f"unknown optimizer {optimizer!r}")
    theta = np.asarray(theta0, dtype=float).reshape(-1).copy()
    if theta.size and not np.all(np.isfinite(theta)):
        raise InputError("initial parameters must be finite")
    steps = []
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    for it in range(max_iters + 1):
        value, grad = fun(theta)
        value = float(value)
        grad = np.asarray(grad, dtype=float).reshape(-1)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise DivergenceDetected(f"non-finite objective at iteration {it}")
        gnorm = float(np.linalg.norm(grad))
        steps.append(MinimizeStep(it, theta.copy(), value, gnorm))
        if gnorm < tol:
            return MinimizeResult(tuple(steps), True)
        if it == max_iters:
            break
        if optimizer == "gd":
            theta = theta - rate * grad
        else:
            b1, b2 = betas
            m = b1 * m + (1 - b1) * grad
            v = b2 * v + (1 - b2) * grad * grad
            mhat = m / (1 - b1 ** (it + 1))
            vhat = v / (1 - b2 ** (it + 1))
            theta = theta - rate * mhat / (np.sqrt(vhat) + adam_eps)
    return MinimizeResult(tuple(steps), False)
