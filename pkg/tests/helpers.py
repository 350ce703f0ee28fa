"""Shared test utilities: random instance generators and independent oracles.

The oracles here deliberately avoid the package's own machinery (plain kron
products, explicit index loops) so that agreement checks are meaningful.
"""

import numpy as np

from tnsim.circuits import Circuit, standard_gate

_I2 = np.eye(2, dtype=complex)
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

ONE_QUBIT = ("h", "x", "y", "z", "s", "t", "rx", "ry", "rz")
TWO_QUBIT = ("cnot", "cz", "crz", "swap")
PARAMETRIC = ("rx", "ry", "rz", "crz")


def random_circuit(rng, n_qubits, n_gates, p_two=0.35, trainable=False, max_params=None):
    """Random circuit over the full standard gate set.

    With ``trainable=True`` every parametric gate becomes a trainable slot
    (capped at ``max_params``).
    """
    gates = []
    train = []
    for _ in range(n_gates):
        two = n_qubits >= 2 and rng.random() < p_two
        if two:
            name = TWO_QUBIT[rng.integers(len(TWO_QUBIT))]
            wires = tuple(int(w) for w in rng.choice(n_qubits, size=2, replace=False))
        else:
            name = ONE_QUBIT[rng.integers(len(ONE_QUBIT))]
            wires = (int(rng.integers(n_qubits)),)
        param = float(rng.uniform(-np.pi, np.pi)) if name in PARAMETRIC else None
        if param is not None and trainable and (max_params is None or len(train) < max_params):
            train.append(len(gates))
        gates.append(standard_gate(name, wires, param))
    return Circuit(n_qubits, tuple(gates), tuple(train))


def kron_chain(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def pauli_term_matrix(n_qubits, ops):
    """Dense matrix of one Pauli string via plain kron (qubit 0 leftmost)."""
    mats = [_PAULI[ops[q]] if q in ops else _I2 for q in range(n_qubits)]
    return kron_chain(mats)


def hamiltonian_matrix(n_qubits, terms):
    """terms: iterable of (coeff, {qubit: 'X'|'Y'|'Z'})."""
    dim = 2**n_qubits
    h = np.zeros((dim, dim), dtype=complex)
    for coeff, ops in terms:
        h += coeff * pauli_term_matrix(n_qubits, ops)
    return h


def random_network(rng, max_tensors=6, max_extent=4, ensure_output=True):
    """Random connected labeled network with extents in 1..max_extent.

    Builds a random spanning tree over the tensors, sprinkles extra shared
    labels, and adds a few dangling axes, some of which become outputs.
    """
    from tnsim.network import TensorNetwork
    from tnsim.tensor import DenseTensor

    n = int(rng.integers(1, max_tensors + 1))
    axes = [[] for _ in range(n)]  # per-tensor list of (label, extent)
    counter = 0

    def fresh(ext=None):
        nonlocal counter
        lab = f"x{counter}"
        counter += 1
        return lab, int(ext if ext is not None else rng.integers(1, max_extent + 1))

    for i in range(1, n):
        j = int(rng.integers(i))
        lab, ext = fresh()
        axes[i].append((lab, ext))
        axes[j].append((lab, ext))
    for _ in range(int(rng.integers(0, n))):  # extra shared labels
        i, j = rng.integers(n, size=2)
        if i == j:
            continue
        lab, ext = fresh()
        axes[int(i)].append((lab, ext))
        axes[int(j)].append((lab, ext))
    output = []
    for i in range(n):
        for _ in range(int(rng.integers(0, 3))):
            lab, ext = fresh()
            axes[i].append((lab, ext))
            if rng.random() < 0.6:
                output.append(lab)
    if ensure_output and not output:
        # promote an existing label so the result is not always a scalar
        for ax in axes:
            if ax:
                output.append(ax[0][0])
                break
    tensors = []
    labels = []
    for ax in axes:
        shape = tuple(e for _, e in ax)
        data = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        tensors.append(DenseTensor(data))
        labels.append(tuple(l for l, _ in ax))
    return TensorNetwork(tuple(tensors), tuple(labels), tuple(dict.fromkeys(output)))


def whole_network_einsum(net):
    """Single-shot einsum of the full network: the independent value oracle."""
    ids = {}
    for ls in net.labels:
        for lab in ls:
            ids.setdefault(lab, len(ids))
    args = []
    for t, ls in zip(net.tensors, net.labels):
        args.append(t.array)
        args.append([ids[l] for l in ls])
    args.append([ids[l] for l in net.output_labels])
    return np.einsum(*args)


def brute_partial_trace(rho, n_qubits, keep):
    """Reduced density matrix by explicit double-index summation.

    ``rho`` is 2^n x 2^n; returns the 2^k x 2^k marginal over ``keep``
    (ascending order), summing over every basis pair that agrees on the traced
    qubits. Exponentially slow on purpose.
    """
    keep = sorted(keep)
    traced = [q for q in range(n_qubits) if q not in keep]
    k = len(keep)
    out = np.zeros((2**k, 2**k), dtype=complex)

    def bits_to_index(bits):
        idx = 0
        for b in bits:
            idx = (idx << 1) | b
        return idx

    for row in range(2**k):
        row_bits = [(row >> (k - 1 - i)) & 1 for i in range(k)]
        for col in range(2**k):
            col_bits = [(col >> (k - 1 - i)) & 1 for i in range(k)]
            acc = 0.0 + 0j
            for env in range(2 ** len(traced)):
                env_bits = [(env >> (len(traced) - 1 - i)) & 1 for i in range(len(traced))]
                full_row = [0] * n_qubits
                full_col = [0] * n_qubits
                for q, b in zip(keep, row_bits):
                    full_row[q] = b
                for q, b in zip(keep, col_bits):
                    full_col[q] = b
                for q, b in zip(traced, env_bits):
                    full_row[q] = b
                    full_col[q] = b
                acc += rho[bits_to_index(full_row), bits_to_index(full_col)]
            out[row, col] = acc
    return out
