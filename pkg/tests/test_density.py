import itertools
import tracemalloc

import numpy as np
import pytest

from tnsim.circuits import StateVector, zero_state
from tnsim.density import (
    DensityOperator,
    density_from_state,
    mutual_information,
    partial_trace,
    partial_trace_pure,
    purity,
    von_neumann_entropy,
)
from tnsim.errors import (
    EmptyKeepSet,
    InputError,
    KeepTooLarge,
    NotPSD,
    OverlappingSets,
    QubitOutOfRange,
    ShapeError,
    TooManyQubits,
)
from tnsim.tensor import DenseTensor

from helpers import brute_partial_trace


def state_from_vector(vec, n):
    vec = np.asarray(vec, dtype=complex)
    return StateVector(n, DenseTensor(vec.reshape((2,) * n)))


def random_pure(rng, n):
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return state_from_vector(v / np.linalg.norm(v), n)


def random_density(rng, m):
    a = rng.standard_normal((2**m, 2**m)) + 1j * rng.standard_normal((2**m, 2**m))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    return DensityOperator(m, DenseTensor(rho))


def bell():
    return state_from_vector([1, 0, 0, 1] / np.sqrt(2), 2)


def test_density_from_state_basics():
    rho0 = density_from_state(zero_state(1))
    assert np.allclose(rho0.matrix.array, [[1, 0], [0, 0]])
    plus = state_from_vector([1, 1] / np.sqrt(2), 1)
    assert np.allclose(density_from_state(plus).matrix.array, np.full((2, 2), 0.5))
    rng = np.random.default_rng(3)
    rho = density_from_state(random_pure(rng, 5))
    assert abs(np.trace(rho.matrix.array) - 1.0) < 1e-12
    assert abs(purity(rho) - 1.0) < 1e-10


def test_density_from_state_guard():
    with pytest.raises(TooManyQubits):
        density_from_state(zero_state(14))


def test_density_operator_validation():
    with pytest.raises(InputError):
        DensityOperator(1, DenseTensor([[0.5, 0.5j], [0.5j, 0.5]]))  # not Hermitian
    with pytest.raises(InputError):
        DensityOperator(1, DenseTensor([[0.7, 0.0], [0.0, 0.7]]))  # trace 1.4
    with pytest.raises(NotPSD):
        DensityOperator(1, DenseTensor([[1.5, 0.0], [0.0, -0.5]]))
    with pytest.raises(ShapeError):
        DensityOperator(2, DenseTensor(np.eye(2) / 2))


def test_partial_trace_bell_is_maximally_mixed():
    rho = density_from_state(bell())
    for q in (0, 1):
        red = partial_trace(rho, (q,))
        assert np.allclose(red.matrix.array, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_factorized_state():
    rng = np.random.default_rng(17)
    a = random_density(rng, 2)
    b = random_density(rng, 1)
    joint = DensityOperator(3, DenseTensor(np.kron(a.matrix.array, b.matrix.array)))
    red_a = partial_trace(joint, (0, 1))
    red_b = partial_trace(joint, (2,))
    assert np.allclose(red_a.matrix.array, a.matrix.array, atol=1e-12)
    assert np.allclose(red_b.matrix.array, b.matrix.array, atol=1e-12)


def test_partial_trace_matches_brute_force():
    rng = np.random.default_rng(19)
    rho = random_density(rng, 6)
    for size in (1, 2, 3):
        for keep in itertools.combinations(range(6), size):
            got = partial_trace(rho, keep)
            want = brute_partial_trace(rho.matrix.array, 6, keep)
            assert np.allclose(got.matrix.array, want, atol=1e-12)
            assert abs(np.trace(got.matrix.array) - 1.0) < 1e-12


def test_partial_trace_pure_ghz_marginal():
    ghz = np.zeros(8)
    ghz[0] = ghz[-1] = 1 / np.sqrt(2)
    red = partial_trace_pure(state_from_vector(ghz, 3), (0,))
    assert np.allclose(red.matrix.array, np.diag([0.5, 0.5]), atol=1e-12)


def test_partial_trace_pure_matches_explicit_route():
    rng = np.random.default_rng(23)
    psi = random_pure(rng, 10)
    rho = density_from_state(psi)
    for keep in ((0, 3, 5, 9), (1, 2), (4,), (0, 1, 2, 3)):
        got = partial_trace_pure(psi, keep)
        want = partial_trace(rho, keep)
        assert np.allclose(got.matrix.array, want.matrix.array, atol=1e-12)


def test_keep_order_is_ascending_regardless_of_input_order():
    # |0> on qubit 0, |1> on qubit 1, |+> on qubit 2
    vec = np.kron(np.kron([1, 0], [0, 1]), [1, 1] / np.sqrt(2))
    psi = state_from_vector(vec, 3)
    red = partial_trace_pure(psi, (2, 0))
    want = np.kron([[1, 0], [0, 0]], np.full((2, 2), 0.5))
    assert np.allclose(red.matrix.array, want, atol=1e-12)


def test_purity_values():
    assert abs(purity(DensityOperator(1, DenseTensor(np.eye(2) / 2))) - 0.5) < 1e-12
    assert abs(purity(DensityOperator(3, DenseTensor(np.eye(8) / 8))) - 0.125) < 1e-12
    rng = np.random.default_rng(29)
    for m in (1, 2, 3):
        rho = random_density(rng, m)
        assert 1 / 2**m - 1e-12 <= purity(rho) <= 1 + 1e-12
    reduced = partial_trace_pure(random_pure(rng, 6), (1, 4))
    assert purity(reduced) >= 1 / 4 - 1e-12


def test_entropy_values():
    assert von_neumann_entropy(density_from_state(zero_state(3))) < 1e-9
    half = DensityOperator(1, DenseTensor(np.eye(2) / 2))
    assert abs(von_neumann_entropy(half) - np.log(2)) < 1e-12
    assert abs(von_neumann_entropy(half, bits=True) - 1.0) < 1e-12
    red = partial_trace_pure(bell(), (0,))
    assert abs(von_neumann_entropy(red) - np.log(2)) < 1e-12


def test_entropy_rejects_negative_spectrum():
    # m=9 skips the constructor eigencheck, so entropy has to catch it
    d = 2**9
    diag = np.full(d, (1.0 + 0.1) / (d - 1))
    diag[0] = -0.1
    diag *= 1.0 / diag.sum()
    rho = DensityOperator(9, DenseTensor(np.diag(diag).astype(complex)))
    with pytest.raises(NotPSD):
        von_neumann_entropy(rho)


def test_mutual_information_values():
    product = state_from_vector([1, 0, 0, 0], 2)
    assert abs(mutual_information(product, (0,), (1,))) < 1e-10
    assert abs(mutual_information(bell(), (0,), (1,)) - 2 * np.log(2)) < 1e-9
    assert abs(mutual_information(bell(), (0,), (1,), bits=True) - 2.0) < 1e-9


def test_mutual_information_matches_dense_route():
    rng = np.random.default_rng(31)
    psi = random_pure(rng, 8)
    rho = density_from_state(psi)
    a, b = (0, 2, 5), (1, 7)

    def s_dense(keep):
        return von_neumann_entropy(partial_trace(rho, keep))

    want = s_dense(a) + s_dense(b) - s_dense(tuple(sorted(a + b)))
    assert abs(mutual_information(psi, a, b) - want) < 1e-8
    assert mutual_information(psi, a, b) >= -1e-9


def test_entropy_complementarity():
    rng = np.random.default_rng(37)
    for n in (6, 9):
        psi = random_pure(rng, n)
        for _ in range(4):
            size = int(rng.integers(1, n))
            keep = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
            rest = tuple(q for q in range(n) if q not in keep)
            s1 = von_neumann_entropy(partial_trace_pure(psi, keep))
            s2 = von_neumann_entropy(partial_trace_pure(psi, rest))
            assert abs(s1 - s2) < 1e-8


def test_pure_trace_memory_envelope():
    rng = np.random.default_rng(41)
    n, k = 18, 6
    psi = random_pure(rng, n)
    tracemalloc.start()
    tracemalloc.reset_peak()
    partial_trace_pure(psi, tuple(range(k)))
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    budget = 4 * (2**n + 4**k) * 16
    assert peak <= budget


def test_keep_set_errors():
    psi = random_pure(np.random.default_rng(43), 4)
    with pytest.raises(EmptyKeepSet):
        partial_trace_pure(psi, ())
    with pytest.raises(QubitOutOfRange):
        partial_trace_pure(psi, (0, 7))
    with pytest.raises(InputError):
        partial_trace_pure(psi, (1, 1))
    with pytest.raises(EmptyKeepSet):
        partial_trace(density_from_state(psi), ())
    big = random_pure(np.random.default_rng(47), 16)
    with pytest.raises(KeepTooLarge):
        partial_trace_pure(big, tuple(range(15)))
    with pytest.raises(OverlappingSets):
        mutual_information(psi, (0, 1), (1, 2))


def test_hermitian_residual_slabbed_matches_naive(monkeypatch):
    import tnsim.density as density_mod

    rng = np.random.default_rng(59)
    a = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    naive = float(np.max(np.abs(a - a.conj().T)))
    # force many slabs so the loop boundaries are exercised
    monkeypatch.setattr(density_mod, "_HERMITIAN_BLOCK", 8)
    assert abs(density_mod._hermitian_residual(a) - naive) < 1e-15
    h = a + a.conj().T
    assert density_mod._hermitian_residual(h) == 0.0
