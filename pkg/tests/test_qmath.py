import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from leakcap.qmath import (
    DensityOperator,
    InvalidStateError,
    NotHermitianError,
    entropy,
    hermitian_eig,
    matrices_close,
    mp_entropy,
    partial_trace,
    partial_transpose,
    ptrace,
    ptranspose,
    tensor,
    von_neumann_entropy,
)

from .strategies import ginibre_matrix, ginibre_state, seeds


def naive_ptrace_keep_first(m, da, db):
    out = np.zeros((da, da), dtype=complex)
    for i in range(da):
        for j in range(da):
            for k in range(db):
                out[i, j] += m[i * db + k, j * db + k]
    return out


def naive_ptrace_keep_second(m, da, db):
    out = np.zeros((db, db), dtype=complex)
    for k in range(db):
        for l in range(db):
            for i in range(da):
                out[k, l] += m[i * db + k, i * db + l]
    return out


# --- hermitian_eig ----------------------------------------------------------


def test_eig_identity():
    s = hermitian_eig(np.eye(2))
    assert np.allclose(s.eigenvalues, [1, 1])


def test_eig_diagonal_keeps_standard_basis():
    s = hermitian_eig(np.diag([1.0, 3.0]))
    assert np.allclose(s.eigenvalues, [3, 1])
    assert np.allclose(np.abs(s.eigenvectors), [[0, 1], [1, 0]])


def test_eig_pauli_x_matches_characteristic_polynomial():
    m = np.array([[0, 1], [1, 0]], dtype=complex)
    # roots of x^2 - tr(m) x + det(m)
    tr, det = np.trace(m).real, np.linalg.det(m).real
    disc = math.sqrt(tr * tr - 4 * det)
    expected = sorted([(tr + disc) / 2, (tr - disc) / 2], reverse=True)
    assert np.allclose(hermitian_eig(m).eigenvalues, expected)
    assert np.allclose(hermitian_eig(m).eigenvalues, [1, -1])


def test_eig_rejects_non_hermitian_with_asymmetry():
    with pytest.raises(NotHermitianError) as info:
        hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))
    assert info.value.asymmetry == pytest.approx(1.0)
    assert "1.000e+00" in str(info.value)


def test_eig_rejects_non_square():
    with pytest.raises(ValueError):
        hermitian_eig(np.zeros((2, 3)))


@given(seeds, st.integers(min_value=1, max_value=9))
def test_eig_reconstruction_and_order(seed, dim):
    g = ginibre_matrix(seed, dim, dim)
    m = g + g.conj().T
    s = hermitian_eig(m)
    assert np.linalg.norm(s.reconstruct() - m) < 1e-9
    assert np.all(np.diff(s.eigenvalues) <= 1e-12)


# --- tensor -----------------------------------------------------------------


def test_tensor_identities():
    assert np.array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_basis_projectors():
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    expected = np.zeros((4, 4))
    expected[1, 1] = 1.0
    assert np.array_equal(tensor(p0, p1), expected)


def test_tensor_needs_a_factor():
    with pytest.raises(ValueError):
        tensor()


@given(seeds)
def test_tensor_mixed_product(seed):
    a, b, c, d = (ginibre_matrix(seed + k, 2, 2) for k in range(4))
    assert matrices_close(tensor(a, b) @ tensor(c, d), tensor(a @ c, b @ d), 1e-12)


@given(seeds)
def test_tensor_associative(seed):
    a, b, c = ginibre_matrix(seed, 2, 3), ginibre_matrix(seed + 1, 3, 2), ginibre_matrix(seed + 2, 2, 2)
    assert matrices_close(tensor(tensor(a, b), c), tensor(a, tensor(b, c)), 1e-12)


# --- partial trace ------------------------------------------------------------


def test_ptrace_product_state():
    rho = DensityOperator.from_ket(np.eye(4)[0], (2, 2))
    out = partial_trace(rho, [0])
    assert np.allclose(out.matrix, np.diag([1, 0]))
    assert out.dims == (2,)


def test_ptrace_bell_state_is_maximally_mixed():
    bell = DensityOperator.from_ket(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2))
    for keep in ([0], [1]):
        assert np.allclose(partial_trace(bell, keep).matrix, np.eye(2) / 2)


def test_ptrace_matches_index_summation(rng):
    m = ginibre_state(7, 6)
    rho = DensityOperator(m, (2, 3))
    assert matrices_close(partial_trace(rho, [0]).matrix, naive_ptrace_keep_first(m, 2, 3), 1e-12)
    assert matrices_close(partial_trace(rho, [1]).matrix, naive_ptrace_keep_second(m, 2, 3), 1e-12)


def test_ptrace_keeps_order_and_rejects_bad_sets():
    m = ginibre_state(3, 12)
    a = ptrace(m, (2, 3, 2), [2, 0])
    b = ptrace(m, (2, 3, 2), [0, 2])
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        ptrace(m, (2, 3, 2), [])
    with pytest.raises(ValueError):
        ptrace(m, (2, 3, 2), [3])
    with pytest.raises(ValueError):
        ptrace(m, (2, 2), [0])


@given(seeds)
def test_ptrace_of_product_recovers_factors(seed):
    a = ginibre_state(seed, 2)
    b = ginibre_state(seed + 1, 3)
    rho = DensityOperator(tensor(a, b), (2, 3))
    assert matrices_close(partial_trace(rho, [0]).matrix, a, 1e-12)
    assert matrices_close(partial_trace(rho, [1]).matrix, b, 1e-12)


@given(seeds)
def test_ptrace_preserves_trace(seed):
    rho = DensityOperator(ginibre_state(seed, 6), (3, 2))
    for keep in ([0], [1]):
        assert abs(np.trace(partial_trace(rho, keep).matrix) - 1) < 1e-12


# --- partial transpose --------------------------------------------------------


def test_ptranspose_product_unchanged():
    rho = DensityOperator(tensor(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), (2, 2))
    assert np.array_equal(partial_transpose(rho, 1), rho.matrix)


def test_ptranspose_bell_state():
    # explicit 4x4 partial transpose of the Bell projector
    bell = DensityOperator.from_ket(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2))
    expected = 0.5 * np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    assert np.allclose(partial_transpose(bell, 1), expected)
    assert hermitian_eig(partial_transpose(bell, 1)).eigenvalues[-1] == pytest.approx(-0.5)


def test_ptranspose_bad_factor():
    rho = DensityOperator(np.eye(4) / 4, (2, 2))
    with pytest.raises(ValueError):
        partial_transpose(rho, 2)


@given(seeds, st.sampled_from([(2, 2), (3, 3), (2, 3)]), st.integers(0, 1))
def test_ptranspose_involution_trace_hermiticity(seed, dims, factor):
    m = ginibre_state(seed, dims[0] * dims[1])
    rho = DensityOperator(m, dims)
    pt = partial_transpose(rho, factor)
    assert matrices_close(ptranspose(pt, dims, factor), m, 1e-15)
    assert abs(np.trace(pt) - 1) < 1e-12
    assert np.max(np.abs(pt - pt.conj().T)) < 1e-12


# --- entropy ----------------------------------------------------------------------


def test_entropy_pure_and_mixed():
    assert von_neumann_entropy(DensityOperator.from_ket([1, 1j])) == pytest.approx(0, abs=1e-12)
    assert von_neumann_entropy(DensityOperator(np.eye(2) / 2)) == pytest.approx(1.0)
    assert von_neumann_entropy(DensityOperator(np.diag([0.5, 0.25, 0.25]))) == pytest.approx(1.5)


def test_entropy_clamps_tiny_eigenvalues():
    assert entropy(np.diag([1.0, 1e-13])) == 0.0
    assert entropy(np.diag([1.0, -1e-13])) == 0.0


@given(seeds, st.integers(min_value=1, max_value=9), st.integers(min_value=1, max_value=9))
def test_entropy_bounds(seed, dim, rank):
    rank = min(rank, dim)
    rho = DensityOperator(ginibre_state(seed, dim, rank))
    s = von_neumann_entropy(rho)
    assert -1e-12 <= s <= math.log2(dim) + 1e-12
    assert s <= math.log2(rank) + 1e-9


def test_mp_entropy_matches_float():
    m = ginibre_state(11, 5)
    with mp.workdps(30):
        s = mp_entropy(mp.matrix(m.tolist()))
    assert float(s) == pytest.approx(entropy(m), abs=1e-12)


def test_mp_entropy_uses_blocks():
    m = np.zeros((4, 4))
    m[:2, :2] = [[0.3, 0.1], [0.1, 0.2]]
    m[2, 2], m[3, 3] = 0.25, 0.25
    with mp.workdps(30):
        s = mp_entropy(mp.matrix(m.tolist()))
    assert float(s) == pytest.approx(entropy(m), abs=1e-14)


# --- DensityOperator -------------------------------------------------------------


def test_density_operator_validation():
    with pytest.raises(InvalidStateError):
        DensityOperator(np.diag([0.6, 0.6]))
    with pytest.raises(InvalidStateError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError):
        DensityOperator(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        DensityOperator(np.eye(4) / 4, (3, 2))


def test_density_operator_is_read_only():
    rho = DensityOperator(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0


@given(seeds, st.integers(min_value=1, max_value=9))
def test_spectrum_of_state_sums_to_one(seed, dim):
    rho = DensityOperator(ginibre_state(seed, dim))
    assert abs(hermitian_eig(rho.matrix).eigenvalues.sum() - 1) < 1e-10
