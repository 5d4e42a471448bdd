import warnings

import numpy as np
import pytest
import scipy.linalg as la
from numpy.testing import assert_allclose

from app.core import matkit
from app.core.errors import DimensionError, Overflow, SingularMatrix


def test_lu_solve_matches_direct_solution(rng):
    A = rng.standard_normal((5, 5)) + 5 * np.eye(5)
    B = rng.standard_normal((5, 3))
    X = matkit.lu_solve(A, B)
    assert_allclose(A @ X, B, atol=1e-12)


def test_lu_solve_vector_rhs():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    x = matkit.lu_solve(A, np.array([3.0, 5.0]))
    assert x.shape == (2,)
    assert_allclose(x, [0.8, 1.4], atol=1e-14)


def test_lu_solve_singular():
    with pytest.raises(SingularMatrix):
        matkit.lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))


def test_lu_solve_singular_raises_without_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(SingularMatrix):
            matkit.lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))
        with pytest.raises(SingularMatrix):
            matkit.lu_solve(np.zeros((3, 3)), np.ones(3))


def test_lu_solve_residual(rng):
    for _ in range(20):
        A = rng.standard_normal((8, 8))
        B = rng.standard_normal((8, 3))
        X = matkit.lu_solve(A, B)
        bound = 1e-10 * (1.0 + matkit.frobenius(A) * matkit.frobenius(X))
        assert matkit.frobenius(A @ X - B) <= bound


def test_lu_solve_dimension_mismatch():
    with pytest.raises(DimensionError):
        matkit.lu_solve(np.eye(3), np.ones((2, 1)))


def test_sym_eig_reconstructs(rng):
    M = rng.standard_normal((6, 6))
    S = M + M.T
    eigvals, V = matkit.sym_eig(S)
    assert np.all(np.diff(eigvals) >= 0)
    assert_allclose(V.T @ V, np.eye(6), atol=1e-12)
    assert_allclose(S @ V, V @ np.diag(eigvals), atol=1e-10)


def test_sym_eig_zero_matrix():
    eigvals, V = matkit.sym_eig(np.zeros((3, 3)))
    assert_allclose(eigvals, np.zeros(3))
    assert_allclose(V, np.eye(3))


def test_max_eig():
    assert matkit.max_eig(np.diag([-3.0, 2.0, 1.0])) == pytest.approx(2.0)


def test_kron_scalar_and_matrix():
    assert_allclose(matkit.kron(2.0, np.eye(2)), 2 * np.eye(2))
    assert matkit.kron(np.eye(3), np.ones((2, 1))).shape == (6, 3)


def test_expm_against_diagonal():
    A = np.diag([-1.0, 0.5])
    assert_allclose(matkit.expm(A, 2.0), np.diag(np.exp([-2.0, 1.0])), rtol=1e-13)


def test_expm_matches_scipy(rng):
    A = rng.standard_normal((4, 4))
    assert_allclose(matkit.expm(A, 0.3), la.expm(0.3 * A), rtol=1e-12)


def test_expm_overflow():
    with pytest.raises(Overflow):
        matkit.expm(np.eye(2) * 1e5)


def test_cholesky_pd():
    L = matkit.cholesky_pd(np.array([[4.0, 2.0], [2.0, 3.0]]))
    assert L is not None
    assert_allclose(L @ L.T, [[4.0, 2.0], [2.0, 3.0]])
    assert matkit.cholesky_pd(np.array([[1.0, 2.0], [2.0, 1.0]])) is None
    assert matkit.cholesky_pd(np.diag([1.0, 0.0])) is None


def test_is_psd():
    assert matkit.is_psd(np.diag([1.0, 0.0]))
    assert not matkit.is_psd(np.diag([1.0, -1e-3]))


def test_as_matrix_rejects_nan():
    with pytest.raises(DimensionError):
        matkit.as_matrix([[1.0, np.nan]])


def test_sym_eig_reconstruction_up_to_24(rng):
    for n in (1, 2, 5, 12, 24):
        M = rng.standard_normal((n, n))
        S = M + M.T
        eigvals, V = matkit.sym_eig(S)
        assert matkit.frobenius(S - V @ np.diag(eigvals) @ V.T) <= 1e-9 * matkit.frobenius(S)
        assert matkit.frobenius(V.T @ V - np.eye(n)) <= 1e-9


def test_kron_mixed_product(rng):
    for _ in range(20):
        p, q, r, s, u, v = (int(k) for k in rng.integers(1, 4, size=6))
        A = rng.standard_normal((p, q))
        C = rng.standard_normal((q, r))
        B = rng.standard_normal((s, u))
        D = rng.standard_normal((u, v))
        assert_allclose(matkit.kron(A, B) @ matkit.kron(C, D), matkit.kron(A @ C, B @ D), atol=1e-12)


def test_expm_semigroup(rng):
    for _ in range(20):
        A = rng.standard_normal((4, 4))
        t, s = rng.uniform(-2.0, 2.0, size=2)
        left = matkit.expm(A, t + s)
        Et, Es = matkit.expm(A, t), matkit.expm(A, s)
        assert matkit.frobenius(left - Et @ Es) <= 1e-10 * matkit.frobenius(Et) * matkit.frobenius(Es)


def test_expm_nilpotent():
    N = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert_allclose(matkit.expm(N), [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)
    assert_allclose(matkit.expm(N, -3.0), [[1.0, -3.0], [0.0, 1.0]], atol=1e-14)
    assert_allclose(matkit.expm(np.zeros((3, 3))), np.eye(3))


def test_as_matrix_shapes():
    assert matkit.as_matrix(2.0).shape == (1, 1)
    assert matkit.as_matrix([1.0, 2.0, 3.0]).shape == (1, 3)
    with pytest.raises(DimensionError):
        matkit.as_matrix(np.zeros((2, 2, 2)))
