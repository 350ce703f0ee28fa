"""Command-line front end.

Every subcommand prints one RunReport (JSON by default, ``--format csv``
for flat rows) and exits 0; malformed input exits 2 with a message on
stderr; a numerical failure inside a valid computation exits 1.  All
randomness is drawn from ``--seed``, and everything outside the report's
``measured`` block reproduces exactly for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .autodiff import (
    evaluate_expval,
    finite_diff_grad,
    grad_expval,
    parameter_shift_grad,
)
from .bench import RunReport, bench_ptrace, bench_tfim, measure
from .circuits import circuit_from_dict, simulate_dense
from .errors import InputError, NumericalError, ParseError
from .hamiltonians import hamiltonian_from_dict
from .maxcut import (
    MAX_BRUTE_FORCE_VERTICES,
    brute_force_maxcut,
    load_graph,
    result_to_dict,
    solve_maxcut,
)
from .network import network_from_dict, optimize_path
from .tt import simulate_tt, tt_norm, tt_to_dense

# exact TT runs on wide registers need an explicit bond cap
MAX_UNCAPPED_TT_QUBITS = 24

_AMPLITUDE_DUMP_LIMIT = 8


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")


def _read_json(path: str) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}")


def _check_tt_cap(engine: str, n_qubits: int, chi) -> None:
    if engine == "tt" and chi is None and n_qubits > MAX_UNCAPPED_TT_QUBITS:
        raise InputError(
            f"uncapped TT evolution on {n_qubits} qubits; pass --chi to bound memory"
        )


def _cmd_expval(args) -> RunReport:
    circuit = circuit_from_dict(_read_json(args.circuit))
    ham = hamiltonian_from_dict(_read_json(args.ham))
    _check_tt_cap(args.engine, circuit.n_qubits, args.chi)

    def run():
        return evaluate_expval(
            circuit, ham, engine=args.engine, eps=args.eps, chi_max=args.chi
        )

    value, ms, peak = measure(run)
    return RunReport(
        command="expval",
        seed=args.seed,
        inputs={
            "circuit": args.circuit, "ham": args.ham, "engine": args.engine,
            "chi": args.chi, "eps": args.eps,
        },
        outputs={
            "value": float(value),
            "n_qubits": circuit.n_qubits,
            "n_terms": len(ham.terms),
        },
        measured={"wall_ms": {"expval": ms}, "peak_bytes": peak},
    )


def _cmd_grad(args) -> RunReport:
    circuit = circuit_from_dict(_read_json(args.circuit))
    ham = hamiltonian_from_dict(_read_json(args.ham))
    _check_tt_cap(args.engine, circuit.n_qubits, args.chi)
    theta = circuit.params()
    kwargs = {"engine": args.engine, "eps": args.eps, "chi_max": args.chi}

    def run():
        if args.method == "ad":
            return grad_expval(circuit, ham, theta, **kwargs)
        if args.method == "shift":
            grad = parameter_shift_grad(circuit, ham, theta, **kwargs)
        else:
            grad = finite_diff_grad(circuit, ham, theta, **kwargs)
        return evaluate_expval(circuit, ham, theta, **kwargs), grad

    (value, grad), ms, peak = measure(run)
    return RunReport(
        command="grad",
        seed=args.seed,
        inputs={
            "circuit": args.circuit, "ham": args.ham, "engine": args.engine,
            "chi": args.chi, "eps": args.eps, "method": args.method,
        },
        outputs={
            "value": float(value),
            "gradient": [float(g) for g in grad],
            "grad_norm": float(np.linalg.norm(grad)),
            "n_params": circuit.n_params,
        },
        measured={"wall_ms": {"grad": ms}, "peak_bytes": peak},
    )


def _cmd_simulate(args) -> RunReport:
    circuit = circuit_from_dict(_read_json(args.circuit))
    _check_tt_cap(args.engine, circuit.n_qubits, args.chi)
    outputs = {"n_qubits": circuit.n_qubits, "engine": args.engine}
    if args.engine == "dense":
        state, ms, peak = measure(lambda: simulate_dense(circuit))
        outputs["norm"] = float(state.norm())
        amps = state.ravel()
    else:
        tt, ms, peak = measure(
            lambda: simulate_tt(circuit, eps=args.eps, chi_max=args.chi)
        )
        outputs["norm"] = float(tt_norm(tt))
        outputs["bond_dims"] = list(tt.bond_dims)
        outputs["discarded_weight"] = float(tt.discarded_weight)
        amps = None
        if circuit.n_qubits <= _AMPLITUDE_DUMP_LIMIT:
            amps = tt_to_dense(tt).ravel()
    if circuit.n_qubits <= _AMPLITUDE_DUMP_LIMIT and amps is not None:
        outputs["amplitudes"] = [[float(a.real), float(a.imag)] for a in amps]
    return RunReport(
        command="simulate",
        seed=args.seed,
        inputs={
            "circuit": args.circuit, "engine": args.engine,
            "chi": args.chi, "eps": args.eps,
        },
        outputs=outputs,
        measured={"wall_ms": {"simulate": ms}, "peak_bytes": peak},
    )


def _parse_keep(args):
    if args.keep is not None:
        try:
            return tuple(int(tok) for tok in args.keep.split(",") if tok.strip())
        except ValueError:
            raise ParseError(f"--keep expects comma-separated integers, got {args.keep!r}")
    if args.keep_size is not None:
        return None
    raise InputError("give either --keep or --keep-size")


def _cmd_ptrace(args) -> RunReport:
    keep = _parse_keep(args)
    report = bench_ptrace(
        n_qubits=args.n, keep=keep, keep_size=args.keep_size,
        reps=args.reps, seed=args.seed,
    )
    return dataclasses.replace(report, command="ptrace")


def _cmd_maxcut(args) -> RunReport:
    graph = load_graph(_read_text(args.graph))

    def run():
        return solve_maxcut(
            graph,
            depth=args.depth,
            restarts=args.restarts,
            max_iters=args.max_iters,
            seed=args.seed,
            alpha=args.alpha,
            threads=args.threads,
        )

    result, ms, peak = measure(run)
    optimal = None
    if graph.num_vertices <= MAX_BRUTE_FORCE_VERTICES:
        optimal = brute_force_maxcut(graph)[0]
    return RunReport(
        command="maxcut",
        seed=args.seed,
        inputs={
            "graph": args.graph, "depth": args.depth, "restarts": args.restarts,
            "alpha": args.alpha, "max_iters": args.max_iters,
            "num_vertices": graph.num_vertices, "num_edges": len(graph.edges),
        },
        outputs=result_to_dict(result, optimal),
        measured={"wall_ms": {"solve": ms}, "peak_bytes": peak},
    )


def _cmd_paths(args) -> RunReport:
    net = network_from_dict(_read_json(args.network))

    def run():
        return optimize_path(net, strategy=args.strategy, objective=args.objective)

    path, ms, peak = measure(run)
    return RunReport(
        command="paths",
        seed=args.seed,
        inputs={
            "network": args.network, "strategy": args.strategy,
            "objective": args.objective,
        },
        outputs={
            "steps": [list(s) for s in path.steps],
            "est_flops": float(path.est_flops),
            "est_peak_memory": float(path.est_peak_memory),
            "num_tensors": net.num_tensors,
        },
        measured={"wall_ms": {"optimize": ms}, "peak_bytes": peak},
    )


def _cmd_bench(args) -> RunReport:
    if args.bench_kind == "tfim":
        return bench_tfim(
            n_qubits=args.n, n_gates=args.gates, chi_max=args.chi,
            grad=args.grad, eps=args.eps, seed=args.seed,
        )
    keep = _parse_keep(args)
    return bench_ptrace(
        n_qubits=args.n, keep=keep, keep_size=args.keep_size,
        reps=args.reps, seed=args.seed,
    )


def _add_common(sp) -> None:
    sp.add_argument("--seed", type=int, default=0, help="master RNG seed")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                    help="worker threads for independent subtasks")


def _add_engine(sp) -> None:
    sp.add_argument("--engine", choices=("dense", "tt"), default="dense")
    sp.add_argument("--chi", type=int, default=None, help="TT bond cap")
    sp.add_argument("--eps", type=float, default=0.0,
                    help="TT relative truncation threshold")


def _add_keep(sp) -> None:
    sp.add_argument("--n", type=int, required=True, help="state size in qubits")
    sp.add_argument("--keep", type=str, default=None,
                    help="comma-separated qubits to retain")
    sp.add_argument("--keep-size", type=int, default=None,
                    help="retain the first this many qubits")
    sp.add_argument("--reps", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tnsim",
        description="tensor-network circuit simulation, gradients, and benchmarks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expval", help="expectation value of a Pauli sum")
    p.add_argument("--circuit", required=True, help="circuit JSON file")
    p.add_argument("--ham", required=True, help="Hamiltonian JSON file")
    _add_engine(p)
    _add_common(p)

    p = sub.add_parser("grad", help="gradient of an expectation value")
    p.add_argument("--circuit", required=True)
    p.add_argument("--ham", required=True)
    p.add_argument("--method", choices=("ad", "shift", "fd"), default="ad")
    _add_engine(p)
    _add_common(p)

    p = sub.add_parser("simulate", help="run a circuit and report the state")
    p.add_argument("--circuit", required=True)
    _add_engine(p)
    _add_common(p)

    p = sub.add_parser("ptrace", help="reduced density operator of a random state")
    _add_keep(p)
    _add_common(p)

    p = sub.add_parser("maxcut", help="variational MaxCut on an edge-list graph")
    p.add_argument("--graph", required=True, help="edge-list file")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=300)
    _add_common(p)

    p = sub.add_parser("paths", help="contraction-order search for a network")
    p.add_argument("--network", required=True, help="network JSON file")
    p.add_argument("--strategy", choices=("greedy", "optimal", "exhaustive"),
                   default="greedy")
    p.add_argument("--objective", choices=("flops", "memory"), default="flops")
    _add_common(p)

    p = sub.add_parser("bench", help="instrumented benchmark workloads")
    bsub = p.add_subparsers(dest="bench_kind", required=True)
    bt = bsub.add_parser("tfim", help="TT forward/backward on a TFIM energy")
    bt.add_argument("--n", type=int, default=500)
    bt.add_argument("--gates", type=int, default=5000)
    bt.add_argument("--chi", type=int, default=16)
    bt.add_argument("--grad", action=argparse.BooleanOptionalAction, default=True)
    bt.add_argument("--eps", type=float, default=0.0)
    _add_common(bt)
    bp = bsub.add_parser("ptrace", help="timed partial trace with envelope check")
    _add_keep(bp)
    _add_common(bp)

    return parser


_DISPATCH = {
    "expval": _cmd_expval,
    "grad": _cmd_grad,
    "simulate": _cmd_simulate,
    "ptrace": _cmd_ptrace,
    "maxcut": _cmd_maxcut,
    "paths": _cmd_paths,
    "bench": _cmd_bench,
}


def _flatten(obj, prefix="", into=None):
    into = {} if into is None else into
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            _flatten(v, f"{key}.", into)
        elif isinstance(v, list):
            into[key] = json.dumps(v)
        else:
            into[key] = v
    return into


def _emit_csv(report: RunReport, stream) -> None:
    base = {"command": report.command, "version": report.version, "seed": report.seed}
    _flatten(report.outputs, into=base)
    rep_ms = report.measured.get("rep_ms")
    if rep_ms:
        rows = [dict(base, rep=i, wall_ms=t) for i, t in enumerate(rep_ms)]
    else:
        wall = report.measured.get("wall_ms", {})
        rows = [dict(base, wall_ms=sum(wall.values()))]
    writer = csv.DictWriter(stream, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)


def emit(report: RunReport, fmt: str, stream=None) -> None:
    stream = sys.stdout if stream is None else stream
    if fmt == "json":
        json.dump(report.to_dict(), stream, indent=2)
        stream.write("\n")
    else:
        _emit_csv(report, stream)


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else int(exc.code)
    try:
        report = _DISPATCH[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    emit(report, args.format)
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
