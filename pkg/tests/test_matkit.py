import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphcca.errors import NotSymmetric, RankRequestTooLarge, SingularMatrix
from graphcca.matkit import generalized_eig_spd, sign_fix, sym_eig, sym_inv_sqrt, top_d_svd
from oracles import random_spd


def test_inv_sqrt_identity():
    np.testing.assert_allclose(sym_inv_sqrt(np.eye(3)), np.eye(3), atol=1e-15)


def test_inv_sqrt_diagonal():
    np.testing.assert_allclose(sym_inv_sqrt(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-15)


def test_inv_sqrt_random_8():
    M = random_spd(np.random.default_rng(0), 8)
    R = sym_inv_sqrt(M)
    assert np.max(np.abs(R @ M @ R - np.eye(8))) < 1e-10
    np.testing.assert_array_equal(R, R.T)


def test_inv_sqrt_hundred_random():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 51))
        M = random_spd(rng, n, cond=1e3)
        R = sym_inv_sqrt(M)
        assert np.max(np.abs(R @ M @ R - np.eye(n))) < 1e-9


def test_inv_sqrt_jitter():
    M = np.diag([1.0, 0.0])
    with pytest.raises(SingularMatrix):
        sym_inv_sqrt(M)
    R = sym_inv_sqrt(M, jitter=1.0)
    np.testing.assert_allclose(R @ (M + np.eye(2)) @ R, np.eye(2), atol=1e-14)


def test_inv_sqrt_errors():
    with pytest.raises(NotSymmetric):
        sym_inv_sqrt(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(SingularMatrix):
        sym_inv_sqrt(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        sym_inv_sqrt(np.eye(2), jitter=-1.0)


def test_svd_diagonal():
    svd = top_d_svd(np.diag([3.0, 1.0]), 1)
    np.testing.assert_allclose(svd.singulars, [3.0])
    np.testing.assert_allclose(svd.left[:, 0], [1, 0])
    np.testing.assert_allclose(svd.right[:, 0], [1, 0])


def test_svd_rank_one():
    rng = np.random.default_rng(2)
    a = rng.normal(size=5)
    b = rng.normal(size=3)
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)
    svd = top_d_svd(np.outer(a, b), 1)
    np.testing.assert_allclose(svd.singulars, [1.0], rtol=1e-14)
    s = np.sign(svd.left[:, 0] @ a)
    np.testing.assert_allclose(svd.left[:, 0], s * a, atol=1e-14)
    np.testing.assert_allclose(svd.right[:, 0], s * b, atol=1e-14)


def test_svd_matches_gram_eigen_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        C = rng.normal(size=(6, 4))
        svd = top_d_svd(C, 4)
        w, R = np.linalg.eigh(C.T @ C)
        np.testing.assert_allclose(svd.singulars, np.sqrt(w[::-1]), rtol=1e-9)
        R = R[:, ::-1]
        np.testing.assert_allclose(np.abs(np.sum(R * svd.right, axis=0)), 1.0, atol=1e-9)
        # objective identity: sum of singulars equals Tr(L^T C R)
        assert np.isclose(np.trace(svd.left.T @ C @ svd.right), svd.singulars.sum(), rtol=1e-12)
        np.testing.assert_allclose(svd.left.T @ svd.left, np.eye(4), atol=1e-12)


def test_svd_rank_request():
    with pytest.raises(RankRequestTooLarge):
        top_d_svd(np.ones((3, 2)), 3)


def test_sign_convention():
    rng = np.random.default_rng(4)
    svd = top_d_svd(rng.normal(size=(7, 5)), 5)
    idx = np.argmax(np.abs(svd.left), axis=0)
    assert np.all(svd.left[idx, np.arange(5)] > 0)
    v = sign_fix(np.array([[1.0, -2.0], [-3.0, 2.0]]))
    # ties go to the lowest index
    np.testing.assert_array_equal(v, [[-1.0, 2.0], [3.0, -2.0]])


def test_geneig_standard():
    res = generalized_eig_spd(np.diag([2.0, 1.0]), np.eye(2))
    np.testing.assert_allclose(res.eigenvalues, [2.0, 1.0])
    np.testing.assert_allclose(res.eigenvectors, np.eye(2), atol=1e-15)


def test_geneig_equal_pair():
    B = random_spd(np.random.default_rng(5), 5)
    np.testing.assert_allclose(generalized_eig_spd(B, B).eigenvalues, np.ones(5), rtol=1e-10)


def test_geneig_residual_and_b_orthonormal():
    rng = np.random.default_rng(6)
    A = rng.normal(size=(6, 6))
    A = A + A.T
    B = random_spd(rng, 6)
    res = generalized_eig_spd(A, B)
    W, lam = res.eigenvectors, res.eigenvalues
    assert np.max(np.abs(A @ W - (B @ W) * lam)) < 1e-9
    np.testing.assert_allclose(W.T @ B @ W, np.eye(6), atol=1e-10)
    assert np.all(np.diff(lam) <= 0)


def test_geneig_congruence_invariance():
    rng = np.random.default_rng(7)
    for _ in range(10):
        A = rng.normal(size=(5, 5))
        A = A + A.T
        B = random_spd(rng, 5)
        T = rng.normal(size=(5, 5)) + 3 * np.eye(5)
        lam = generalized_eig_spd(A, B).eigenvalues
        lam_t = generalized_eig_spd(T.T @ A @ T, T.T @ B @ T).eigenvalues
        np.testing.assert_allclose(lam_t, lam, rtol=1e-8, atol=1e-8 * np.abs(lam).max())


def test_geneig_errors():
    with pytest.raises(SingularMatrix):
        generalized_eig_spd(np.eye(2), np.diag([1.0, 0.0]))
    with pytest.raises(NotSymmetric):
        generalized_eig_spd(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))


def test_determinism():
    rng = np.random.default_rng(8)
    M = random_spd(rng, 12)
    C = rng.normal(size=(9, 7))
    assert np.array_equal(sym_inv_sqrt(M), sym_inv_sqrt(M.copy()))
    a, b = top_d_svd(C, 3), top_d_svd(C.copy(), 3)
    assert np.array_equal(a.left, b.left) and np.array_equal(a.singulars, b.singulars)
    e1, e2 = generalized_eig_spd(M, np.eye(12)), generalized_eig_spd(M.copy(), np.eye(12))
    assert np.array_equal(e1.eigenvectors, e2.eigenvectors)


def test_inputs_not_mutated():
    M = random_spd(np.random.default_rng(9), 4)
    keep = M.copy()
    sym_inv_sqrt(M, jitter=0.1)
    sym_eig(M)
    top_d_svd(M, 2)
    np.testing.assert_array_equal(M, keep)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_sym_eig_property(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    A = A + A.T
    res = sym_eig(A)
    V, lam = res.eigenvectors, res.eigenvalues
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-10)
    assert np.max(np.abs(A @ V - V * lam)) < 1e-9 * max(1.0, np.abs(lam).max())
    assert np.all(np.diff(lam) <= 0)
