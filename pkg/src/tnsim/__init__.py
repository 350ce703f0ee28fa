"""Tensor-network toolkit for quantum circuit simulation.

The package provides dense tensors with a contraction-path optimiser, a gate
level circuit IR with dense and matrix-product-state execution engines,
Pauli-sum observables, reduced density operators, reverse-mode
differentiation of expectation values, and a tanh-relaxed MaxCut solver that
packs two graph vertices into each qubit.
"""

__version__ = "0.1.0"

from .errors import TnsimError, InputError, NumericalError
from .seeding import generator, spawn
from .tensor import DenseTensor, make_tensor, contract_pair, adjoint, frobenius_norm
from .network import (
    TensorNetwork,
    ContractionPath,
    optimize_path,
    estimate_path,
    execute_path,
    simplify_network,
    network_from_dict,
)
from .circuits import (
    Gate,
    Circuit,
    StateVector,
    standard_gate,
    custom_gate,
    gate_matrix,
    with_params,
    zero_state,
    basis_state,
    random_state,
    simulate_dense,
    circuit_unitary,
    circuit_to_dict,
    circuit_from_dict,
)
from .tt import (
    TTState,
    tt_zero,
    apply_gate_tt,
    simulate_tt,
    tt_inner,
    tt_norm,
    tt_from_dense,
    tt_to_dense,
    canonicalize,
    compress,
)
from .hamiltonians import (
    PauliTerm,
    PauliHamiltonian,
    term,
    tfim,
    expval,
    exact_spectrum_min,
    hamiltonian_to_dict,
    hamiltonian_from_dict,
)
from .density import (
    DensityOperator,
    density_from_state,
    partial_trace,
    partial_trace_pure,
    purity,
    von_neumann_entropy,
    mutual_information,
)
from .autodiff import (
    GradTape,
    build_tape,
    taped_expectations,
    grad_expval,
    evaluate_expval,
    parameter_shift_grad,
    finite_diff_grad,
    minimize,
    init_params,
    MinimizeResult,
)
from .maxcut import (
    Graph,
    MbeResult,
    load_graph,
    mbe_encode,
    mbe_loss,
    mbe_objective,
    brickwork_ansatz,
    round_cut,
    cut_value,
    brute_force_maxcut,
    solve_maxcut,
)
from .bench import RunReport, bench_tfim, bench_ptrace, tfim_workload

__all__ = [
    "Circuit",
    "ContractionPath",
    "DenseTensor",
    "DensityOperator",
    "Gate",
    "GradTape",
    "Graph",
    "InputError",
    "MbeResult",
    "MinimizeResult",
    "NumericalError",
    "PauliHamiltonian",
    "PauliTerm",
    "RunReport",
    "StateVector",
    "TTState",
    "TensorNetwork",
    "TnsimError",
    "__version__",
    "adjoint",
    "apply_gate_tt",
    "basis_state",
    "bench_ptrace",
    "bench_tfim",
    "brickwork_ansatz",
    "brute_force_maxcut",
    "build_tape",
    "canonicalize",
    "circuit_from_dict",
    "circuit_to_dict",
    "circuit_unitary",
    "compress",
    "contract_pair",
    "custom_gate",
    "cut_value",
    "density_from_state",
    "estimate_path",
    "evaluate_expval",
    "exact_spectrum_min",
    "execute_path",
    "expval",
    "finite_diff_grad",
    "frobenius_norm",
    "gate_matrix",
    "generator",
    "grad_expval",
    "hamiltonian_from_dict",
    "hamiltonian_to_dict",
    "init_params",
    "load_graph",
    "make_tensor",
    "mbe_encode",
    "mbe_loss",
    "mbe_objective",
    "minimize",
    "mutual_information",
    "network_from_dict",
    "optimize_path",
    "parameter_shift_grad",
    "partial_trace",
    "partial_trace_pure",
    "purity",
    "random_state",
    "round_cut",
    "simplify_network",
    "simulate_dense",
    "simulate_tt",
    "solve_maxcut",
    "spawn",
    "standard_gate",
    "term",
    "tfim",
    "tfim_workload",
    "tt_from_dense",
    "tt_inner",
    "tt_norm",
    "tt_to_dense",
    "tt_zero",
    "von_neumann_entropy",
    "with_params",
    "zero_state",
]
