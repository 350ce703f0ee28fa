"""MaxCut through a multi-basis encoding.

Two graph vertices share one qubit: the even vertex is read out in the Z
basis, the odd one in X.  A brickwork circuit is trained to minimize the
relaxed loss

    L(theta) = sum_{(u,v,w)} w * tanh(alpha*<sigma_u>) * tanh(alpha*<sigma_v>)

whose minima anti-align the endpoint expectations of heavy edges; signs of
the final expectations are the cut.  All vertex expectations for one loss
evaluation come from a single tape, so each optimizer step costs one
forward and one backward pass regardless of edge count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .autodiff import GradTape, init_params, minimize, taped_expectations
from .circuits import Circuit, standard_gate
from .errors import (
    DuplicateEdge,
    InputError,
    InvalidLabel,
    ParseError,
    SelfLoop,
    SizeMismatch,
    TooManyVertices,
)
from .seeding import spawn

MAX_BRUTE_FORCE_VERTICES = 22


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph with vertices 0..num_vertices-1."""

    num_vertices: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if isinstance(self.num_vertices, bool) or not isinstance(self.num_vertices, int):
            raise InputError("num_vertices must be an integer")
        if self.num_vertices < 0:
            raise InputError("num_vertices must be non-negative")
        edges = []
        seen = set()
        for e in self.edges:
            if len(e) != 3:
                raise InputError(f"edge {e!r} is not a (u, v, weight) triple")
            u, v, w = e
            if isinstance(u, bool) or isinstance(v, bool):
                raise InvalidLabel("vertex labels must be integers")
            if not isinstance(u, (int, np.integer)) or not isinstance(v, (int, np.integer)):
                raise InvalidLabel("vertex labels must be integers")
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise InvalidLabel(
                    f"edge ({u}, {v}) references a vertex outside 0..{self.num_vertices - 1}"
                )
            if u == v:
                raise SelfLoop(f"vertex {u} connected to itself")
            if not math.isfinite(w):
                raise InputError(f"edge ({u}, {v}) has non-finite weight")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DuplicateEdge(f"edge ({u}, {v}) listed twice")
            seen.add(key)
            edges.append((u, v, w))
        object.__setattr__(self, "edges", tuple(edges))

    @property
    def total_abs_weight(self) -> float:
        return float(sum(abs(w) for _, _, w in self.edges))


def load_graph(text: str) -> Graph:
    """Parse an edge list: lines of "u v [w]", '#' comments, optional
    leading line with a single integer fixing the vertex count."""
    header = None
    raw_edges = []
    first_data = True
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        fields = body.split()
        if first_data and len(fields) == 1:
            try:
                header = int(fields[0])
            except ValueError:
                raise ParseError(f"line {lineno}: expected an integer header, got {body!r}")
            if header < 0:
                raise ParseError(f"line {lineno}: vertex count must be non-negative")
            first_data = False
            continue
        first_data = False
        if len(fields) not in (2, 3):
            raise ParseError(f"line {lineno}: expected 'u v [w]', got {body!r}")
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError:
            raise ParseError(f"line {lineno}: vertex labels must be integers, got {body!r}")
        if u < 0 or v < 0:
            raise ParseError(f"line {lineno}: vertex labels must be non-negative")
        w = 1.0
        if len(fields) == 3:
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"line {lineno}: weight must be a number, got {fields[2]!r}")
        raw_edges.append((u, v, w))
    if header is not None:
        n = header
    elif raw_edges:
        n = 1 + max(max(u, v) for u, v, _ in raw_edges)
    else:
        n = 0
    return Graph(n, tuple(raw_edges))


def mbe_encode(graph: Graph):
    """Map each vertex to its (qubit, basis letter) readout.

    Vertex 2k reads qubit k in Z, vertex 2k+1 reads it in X; odd vertex
    counts leave the last X slot unused.  Returns (n_qubits, mapping).
    """
    n_qubits = (graph.num_vertices + 1) // 2
    mapping = tuple((v // 2, "Z" if v % 2 == 0 else "X") for v in range(graph.num_vertices))
    return n_qubits, mapping


def mbe_loss(t_vals, graph: Graph) -> float:
    """Relaxed loss sum(w * t_u * t_v) for per-vertex values t = tanh(alpha*<sigma>)."""
    t = np.asarray(t_vals, dtype=float).reshape(-1)
    if t.size != graph.num_vertices:
        raise SizeMismatch(
            f"{t.size} values supplied for a graph with {graph.num_vertices} vertices"
        )
    return float(sum(w * t[u] * t[v] for u, v, w in graph.edges))


def round_cut(expectations) -> tuple:
    """Sign-round per-vertex expectations to a ±1 assignment (0 rounds to +1)."""
    x = np.asarray(expectations, dtype=float).reshape(-1)
    if x.size and not np.all(np.isfinite(x)):
        raise InputError("expectations must be finite")
    return tuple(1 if v >= 0 else -1 for v in x)


def cut_value(graph: Graph, assignment) -> float:
    a = np.asarray(assignment).reshape(-1)
    if a.size != graph.num_vertices:
        raise SizeMismatch(
            f"assignment length {a.size} does not match {graph.num_vertices} vertices"
        )
    if not all(v in (-1, 1) for v in a.tolist()):
        raise InvalidLabel("assignment entries must be +1 or -1")
    return float(sum(w * (1 - int(a[u]) * int(a[v])) / 2 for u, v, w in graph.edges))


def brute_force_maxcut(graph: Graph):
    """Exhaustive optimum over 2^(V-1) sign patterns with vertex 0 fixed to +1."""
    nv = graph.num_vertices
    if nv > MAX_BRUTE_FORCE_VERTICES:
        raise TooManyVertices(f"{nv} vertices exceeds the brute-force limit of {MAX_BRUTE_FORCE_VERTICES}")
    if nv == 0:
        return 0.0, ()
    # bit v-1 of the pattern flips vertex v relative to vertex 0
    patterns = np.arange(1 << (nv - 1), dtype=np.uint32)
    cuts = np.zeros(patterns.shape, dtype=float)
    for u, v, w in graph.edges:
        bu = (patterns >> (u - 1)) & 1 if u > 0 else np.zeros_like(patterns)
        bv = (patterns >> (v - 1)) & 1 if v > 0 else np.zeros_like(patterns)
        cuts += w * (bu ^ bv)
    best = int(np.argmax(cuts))
    assignment = (1,) + tuple(-1 if (best >> (v - 1)) & 1 else 1 for v in range(1, nv))
    return float(cuts[best]), assignment


def brickwork_ansatz(n_qubits: int, depth: int = 4) -> Circuit:
    """Layers of trainable ry+rz on every qubit, separated by cz lines whose
    pairing offset alternates between layers."""
    if n_qubits < 1:
        raise InputError("ansatz needs at least one qubit")
    if depth < 1:
        raise InputError("depth must be at least 1")
    gates = []
    trainable = []
    for layer in range(depth):
        for name in ("ry", "rz"):
            for q in range(n_qubits):
                trainable.append(len(gates))
                gates.append(standard_gate(name, (q,), 0.0))
        if layer < depth - 1:
            for q in range(layer % 2, n_qubits - 1, 2):
                gates.append(standard_gate("cz", (q, q + 1)))
    return Circuit(n_qubits, tuple(gates), trainable=tuple(trainable))


def vertex_expectations(circuit, theta, graph, engine="dense", eps=0.0, chi_max=None):
    """Per-vertex basis expectations of the circuit's output state."""
    n_qubits, mapping = mbe_encode(graph)
    if circuit.n_qubits != n_qubits:
        raise SizeMismatch(
            f"circuit has {circuit.n_qubits} qubits, encoding needs {n_qubits}"
        )
    tape = GradTape()
    groups = [{q: letter} for q, letter in mapping]
    nodes = taped_expectations(tape, circuit, theta, groups, engine=engine, eps=eps, chi_max=chi_max)
    return np.array([float(tape.value(nid).real) for nid in nodes])


def mbe_objective(circuit, graph, alpha=1.0, engine="dense", eps=0.0, chi_max=None):
    """Build fun(theta) -> (loss, grad) for the relaxed MBE loss.

    One tape per call carries the circuit, every vertex readout, the tanh
    activations, and the edge products; a single backward pass yields the
    full gradient.
    """
    n_qubits, mapping = mbe_encode(graph)
    if circuit.n_qubits != n_qubits:
        raise SizeMismatch(
            f"circuit has {circuit.n_qubits} qubits, encoding needs {n_qubits}"
        )
    if not math.isfinite(alpha) or alpha <= 0:
        raise InputError("alpha must be positive and finite")
    groups = [{q: letter} for q, letter in mapping]

    def fun(theta):
        tape = GradTape()
        nodes = taped_expectations(
            tape, circuit, theta, groups, engine=engine, eps=eps, chi_max=chi_max
        )
        t_nodes = [tape.tanh(tape.scale(tape.real(nid), complex(alpha))) for nid in nodes]
        acc = None
        for u, v, w in graph.edges:
            e = tape.scale(tape.mul(t_nodes[u], t_nodes[v]), complex(w))
            acc = e if acc is None else tape.add(acc, e)
        if acc is None:
            acc = tape.const(np.asarray(0.0 + 0.0j))
        out = tape.real(acc)
        value = float(tape.value(out))
        grad = tape.backward(out, circuit.n_params)
        return value, grad

    return fun


@dataclass(frozen=True)
class MbeResult:
    assignment: tuple
    cut_value: float
    relaxed_loss: float
    iterations: int
    restart_index: int
    seed: int


def _run_restart(circuit, graph, fun, rng, optimizer, rate, max_iters, engine, eps, chi_max):
    theta0 = init_params(circuit.n_params, rng)
    res = minimize(fun, theta0, optimizer=optimizer, rate=rate, max_iters=max_iters)
    exps = vertex_expectations(circuit, res.theta, graph, engine=engine, eps=eps, chi_max=chi_max)
    assignment = round_cut(exps)
    return assignment, cut_value(graph, assignment), res.value, res.n_iters


def solve_maxcut(
    graph: Graph,
    depth: int = 4,
    engine: str = "dense",
    eps: float = 0.0,
    chi_max=None,
    optimizer: str = "adam",
    rate: float = 0.1,
    restarts: int = 5,
    max_iters: int = 300,
    seed: int = 0,
    alpha: float = 1.0,
    threads: int = 1,
) -> MbeResult:
    """Train the brickwork ansatz against the relaxed loss and round to a cut.

    Each restart draws fresh angles from a child stream of ``seed``; the
    best rounded cut wins, ties broken by lowest restart index.  Restarts
    are independent, so ``threads`` > 1 runs them in a thread pool without
    changing the result.
    """
    if restarts < 1:
        raise InputError("need at least one restart")
    if graph.num_vertices == 0 or not graph.edges:
        assignment = (1,) * graph.num_vertices
        return MbeResult(assignment, 0.0, 0.0, 0, 0, seed)
    n_qubits, _ = mbe_encode(graph)
    circuit = brickwork_ansatz(n_qubits, depth)
    fun = mbe_objective(circuit, graph, alpha=alpha, engine=engine, eps=eps, chi_max=chi_max)
    streams = spawn(seed, restarts)

    def run(rng):
        return _run_restart(
            circuit, graph, fun, rng, optimizer, rate, max_iters, engine, eps, chi_max
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, streams))
    else:
        outcomes = [run(rng) for rng in streams]
    best = 0
    for r in range(1, restarts):
        if outcomes[r][1] > outcomes[best][1]:
            best = r
    assignment, cut, loss, iters = outcomes[best]
    return MbeResult(assignment, cut, loss, iters, best, seed)


def result_to_dict(result: MbeResult, optimal=None) -> dict:
    return {
        "cut": result.cut_value,
        "optimal": None if optimal is None else float(optimal),
        "assignment": list(result.assignment),
        "loss": result.relaxed_loss,
        "iters": result.iterations,
        "seed": result.seed,
    }
