"""Benchmark workloads with instrumented timing and allocation peaks.

Each benchmark returns a :class:`RunReport`; everything under ``measured``
(wall clock, allocation peaks) is machine-dependent and excluded from the
determinism contract, while ``outputs`` must reproduce exactly for a fixed
seed.
"""

from __future__ import annotations

import time
import tracemalloc
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import __version__
from .autodiff import evaluate_expval, grad_expval, init_params
from .circuits import Circuit, random_state, standard_gate, with_params
from .errors import InputError, MemoryEnvelopeExceeded
from .density import partial_trace_pure, purity
from .hamiltonians import expval, tfim
from .seeding import generator
from .tt import simulate_tt

# transient allocations of partial_trace_pure stay within this multiple of
# the input-plus-output footprint
MEMORY_ENVELOPE_FACTOR = 4


@dataclass(frozen=True)
class RunReport:
    """Self-describing record of one CLI or benchmark run."""

    command: str
    seed: int | None
    inputs: dict
    outputs: dict
    measured: dict
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "inputs": dict(self.inputs),
            "outputs": dict(self.outputs),
            "measured": dict(self.measured),
        }


def measure(fn):
    """Run ``fn()`` returning (result, wall_ms, peak_bytes above entry)."""
    was_tracing = tracemalloc.is_tracing()
    if not was_tracing:
        tracemalloc.start()
    tracemalloc.reset_peak()
    base, _ = tracemalloc.get_traced_memory()
    t0 = time.perf_counter_ns()
    out = fn()
    wall_ms = (time.perf_counter_ns() - t0) / 1e6
    _, peak = tracemalloc.get_traced_memory()
    if not was_tracing:
        tracemalloc.stop()
    return out, wall_ms, max(0, peak - base)


def tfim_workload(n_qubits: int, n_gates: int) -> Circuit:
    """Brickwork circuit cut to exactly ``n_gates`` gates.

    Layers of per-qubit ry+rz rotations alternate with nearest-neighbour cz
    lines (pairing offset flips each layer); the stream stops mid-layer if
    needed so the gate count is exact.  All rotations are trainable.
    """
    if n_qubits < 1:
        raise InputError("workload needs at least one qubit")
    if n_gates < 0:
        raise InputError("gate count must be non-negative")
    gates = []
    trainable = []
    layer = 0
    while len(gates) < n_gates:
        for name in ("ry", "rz"):
            for q in range(n_qubits):
                if len(gates) >= n_gates:
                    break
                trainable.append(len(gates))
                gates.append(standard_gate(name, (q,), 0.0))
        for q in range(layer % 2, n_qubits - 1, 2):
            if len(gates) >= n_gates:
                break
            gates.append(standard_gate("cz", (q, q + 1)))
        layer += 1
    return Circuit(n_qubits, tuple(gates), trainable=tuple(trainable))


def bench_tfim(
    n_qubits: int = 500,
    n_gates: int = 5000,
    chi_max: int | None = 16,
    grad: bool = True,
    eps: float = 0.0,
    j: float = 1.0,
    h: float = 1.0,
    seed: int = 0,
) -> RunReport:
    """Forward (and optionally backward) pass of a TFIM energy on the TT engine."""
    wall = {}

    def build():
        circuit = tfim_workload(n_qubits, n_gates)
        ham = tfim(n_qubits, j, h)
        theta = init_params(circuit.n_params, generator(seed))
        return circuit, ham, theta

    (circuit, ham, theta), wall["build"], _ = measure(build)

    def forward():
        tt = simulate_tt(with_params(circuit, theta), eps=eps, chi_max=chi_max)
        return tt, expval(tt, ham)

    (tt, value), wall["forward"], peak_fwd = measure(forward)
    histogram = Counter(tt.bond_dims)
    outputs = {
        "gate_count": len(circuit.gates),
        "n_qubits": n_qubits,
        "n_params": circuit.n_params,
        "chi_max": chi_max,
        "expval": float(value),
        "max_bond": int(max(tt.bond_dims)),
        "bond_histogram": {str(k): int(v) for k, v in sorted(histogram.items())},
        "discarded_weight": float(tt.discarded_weight),
    }
    peak = peak_fwd
    if grad:
        def backward():
            return grad_expval(circuit, ham, theta, engine="tt", eps=eps, chi_max=chi_max)

        (gval, gvec), wall["gradient"], peak_bwd = measure(backward)
        peak = max(peak, peak_bwd)
        outputs["grad_value"] = float(gval)
        outputs["grad_norm"] = float(np.linalg.norm(gvec))
        outputs["grad_finite"] = bool(np.all(np.isfinite(gvec)))
    inputs = {
        "n": n_qubits, "gates": n_gates, "chi_max": chi_max, "grad": bool(grad),
        "eps": eps, "j": j, "h": h,
    }
    return RunReport(
        command="bench tfim",
        seed=seed,
        inputs=inputs,
        outputs=outputs,
        measured={"wall_ms": wall, "peak_bytes": int(peak)},
    )


def ptrace_envelope_bytes(n_qubits: int, keep_size: int) -> int:
    footprint = (2 ** n_qubits + 4 ** keep_size) * 16
    return MEMORY_ENVELOPE_FACTOR * footprint


def bench_ptrace(
    n_qubits: int = 20,
    keep=None,
    keep_size: int | None = None,
    reps: int = 3,
    seed: int = 0,
) -> RunReport:
    """Time partial_trace_pure on a seeded random state and check its
    allocation envelope.

    ``keep`` is an explicit qubit tuple; alternatively ``keep_size`` selects
    the first that many qubits.  Raises MemoryEnvelopeExceeded if any rep's
    transient allocations pass MEMORY_ENVELOPE_FACTOR times the combined
    input/output footprint.
    """
    if keep is None:
        if keep_size is None:
            raise InputError("give either keep or keep_size")
        keep = tuple(range(int(keep_size)))
    keep = tuple(int(q) for q in keep)
    if reps < 1:
        raise InputError("reps must be at least 1")
    wall = {}
    state, wall["build"], _ = measure(lambda: random_state(n_qubits, generator(seed)))
    times = []
    peak = 0
    rho = None
    for _ in range(reps):
        rho, ms, rep_peak = measure(lambda: partial_trace_pure(state, keep))
        times.append(ms)
        peak = max(peak, rep_peak)
    envelope = ptrace_envelope_bytes(n_qubits, len(keep))
    if peak > envelope:
        raise MemoryEnvelopeExceeded(
            f"peak {peak} bytes exceeds the {envelope}-byte envelope"
            f" for n={n_qubits}, m={len(keep)}"
        )
    wall["ptrace_median"] = float(np.median(times))
    outputs = {
        "n": n_qubits,
        "keep": list(keep),
        "m": len(keep),
        "reps": reps,
        "purity": float(purity(rho)),
        "trace": float(np.trace(rho.matrix.array).real),
        "envelope_bytes": int(envelope),
    }
    return RunReport(
        command="bench ptrace",
        seed=seed,
        inputs={"n": n_qubits, "keep": list(keep), "reps": reps},
        outputs=outputs,
        measured={
            "wall_ms": wall,
            "peak_bytes": int(peak),
            "rep_ms": [float(t) for t in times],
        },
    )
