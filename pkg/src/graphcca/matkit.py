"""Dense symmetric and rectangular matrix kernels used by every solver.

All routines take and return float64 ``numpy`` arrays and never mutate their
inputs. Eigen- and singular vectors come back with a fixed sign: each column
is flipped so that its largest-magnitude entry is positive (first index wins
on ties), which makes results comparable across solvers and runs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotSymmetric, RankRequestTooLarge, SingularMatrix

#: eigenvalues at or below ``RANK_RTOL * max_eigenvalue`` count as zero
RANK_RTOL = 1e-12
#: allowed asymmetry, relative to the largest entry, before NotSymmetric
SYM_RTOL = 1e-10


@dataclass(frozen=True)
class SymEigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class TruncatedSvd:
    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray


def as_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def symmetrize(M, name="matrix", rtol=SYM_RTOL):
    """Return ``(M + M.T) / 2`` after checking ``M`` is symmetric within ``rtol``."""
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > rtol * max(scale, np.finfo(float).tiny):
        raise NotSymmetric(f"{name} is not symmetric (max |M - M^T| = {asym:.3e})")
    return (M + M.T) / 2


def sign_fix(vectors, *partners):
    """Flip columns so the largest-magnitude entry of each is positive.

    ``partners`` are flipped with the same per-column signs, which keeps
    paired factors (left/right singular vectors) consistent.
    """
    vectors = np.array(vectors, dtype=float)
    if vectors.size == 0:
        return (vectors, *[np.array(p, dtype=float) for p in partners]) if partners else vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs
    if not partners:
        return vectors
    return (vectors, *[np.asarray(p, dtype=float) * signs for p in partners])


def sym_eig(M):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    M = symmetrize(M)
    w, V = np.linalg.eigh(M)
    w, V = w[::-1], V[:, ::-1]
    return SymEigResult(eigenvalues=w.copy(), eigenvectors=sign_fix(V))


def _check_positive_definite(w, name):
    top = w[0] if w.size else 0.0
    if w.size and (top <= 0 or w[-1] <= RANK_RTOL * top):
        raise SingularMatrix(
            f"{name} is singular or indefinite (eigenvalues in [{w[-1]:.3e}, {top:.3e}])"
        )


def sym_inv_sqrt(M, jitter=0.0):
    """Inverse square root ``R`` of a symmetric positive-definite matrix.

    ``R`` is symmetric and satisfies ``R @ (M + jitter*I) @ R = I``. A
    nonnegative ``jitter`` is added to the diagonal first.
    """
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    M = symmetrize(M)
    if jitter:
        M = M + jitter * np.eye(M.shape[0])
    w, V = np.linalg.eigh(M)
    _check_positive_definite(w[::-1], "matrix")
    R = (V / np.sqrt(w)) @ V.T
    return (R + R.T) / 2


def top_d_svd(C, d):
    """Leading ``d`` singular triplets of a dense matrix, singulars descending."""
    C = as_matrix(C)
    if d < 0 or d > min(C.shape):
        raise RankRequestTooLarge(f"d={d} exceeds min dimension {min(C.shape)} of {C.shape}")
    L, s, Rt = np.linalg.svd(C, full_matrices=False)
    left, right = sign_fix(L[:, :d], Rt[:d].T)
    return TruncatedSvd(left=left, singulars=s[:d].copy(), right=right)


def generalized_eig_spd(A, B):
    """Solve ``A w = lam B w`` for symmetric ``A`` and positive-definite ``B``.

    Eigenvalues are returned descending; eigenvectors are B-orthonormal.
    """
    A = symmetrize(A, "A")
    B = symmetrize(B, "B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"A {A.shape} and B {B.shape} differ in shape")
    _check_positive_definite(np.linalg.eigvalsh(B)[::-1], "B")
    try:
        w, W = scipy.linalg.eigh(A, B)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"B is not positive definite: {exc}") from exc
    return SymEigResult(eigenvalues=w[::-1].copy(), eigenvectors=sign_fix(W[:, ::-1]))
