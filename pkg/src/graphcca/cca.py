"""Standard CCA and primal graph-regularized CCA (gCCA).

Data matrices hold one sample per column: ``x`` is ``Dx x N`` and ``y`` is
``Dy x N``. The graph regularizer penalizes ``Tr(U^T X L Y^T V)``, which pulls
canonical variables of strongly connected samples together.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, GraphSizeMismatch, RankRequestTooLarge
from .graph import laplacian_matrix
from .matkit import as_matrix, generalized_eig_spd, sign_fix, sym_inv_sqrt, top_d_svd


@dataclass(frozen=True)
class PairedViews:
    """Two centered views of the same N entities, plus the removed means."""

    x: np.ndarray
    y: np.ndarray
    x_mean: np.ndarray
    y_mean: np.ndarray

    @property
    def n(self):
        return self.x.shape[1]

    @property
    def dx(self):
        return self.x.shape[0]

    @property
    def dy(self):
        return self.y.shape[0]


@dataclass(frozen=True)
class CovarianceSet:
    sxx: np.ndarray
    syy: np.ndarray
    sxy: np.ndarray


@dataclass(frozen=True)
class GccaModel:
    """Canonical matrices ``u`` (Dx x d) and ``v`` (Dy x d) with their singular values."""

    u: np.ndarray
    v: np.ndarray
    gamma: float
    singulars: np.ndarray
    x_mean: np.ndarray
    y_mean: np.ndarray
    jitter: float = 0.0
    variant: str = "gcca"

    @property
    def d(self):
        return self.u.shape[1]


def center(x_raw, y_raw):
    """Remove per-feature (row) means from both views."""
    x_raw = as_matrix(x_raw, "x")
    y_raw = as_matrix(y_raw, "y")
    if x_raw.shape[1] != y_raw.shape[1]:
        raise DimensionMismatch(
            f"views disagree on sample count: {x_raw.shape[1]} vs {y_raw.shape[1]}"
        )
    x_mean = x_raw.mean(axis=1)
    y_mean = y_raw.mean(axis=1)
    return PairedViews(
        x=x_raw - x_mean[:, None],
        y=y_raw - y_mean[:, None],
        x_mean=x_mean,
        y_mean=y_mean,
    )


def covariances(views):
    n = views.n
    sxx = views.x @ views.x.T / n
    syy = views.y @ views.y.T / n
    return CovarianceSet(
        sxx=(sxx + sxx.T) / 2,
        syy=(syy + syy.T) / 2,
        sxy=views.x @ views.y.T / n,
    )


def _orient(u, v):
    # pair-level sign: u's largest entry positive, v follows
    return sign_fix(u, v)


def _check_rank_request(d, views):
    if d < 1 or d > min(views.dx, views.dy):
        raise RankRequestTooLarge(
            f"d={d} must lie in [1, min(Dx, Dy)] = [1, {min(views.dx, views.dy)}]"
        )


def fit_cca(views, d, jitter=0.0):
    """Standard CCA through the symmetric block generalized eigenproblem.

    Solves ``[[0, Sxy], [Syx, 0]] w = rho * blockdiag(Sxx, Syy) w`` and keeps
    the ``d`` largest ``rho`` (the canonical correlations).
    """
    _check_rank_request(d, views)
    cov = covariances(views)
    dx, dy = views.dx, views.dy
    A = np.zeros((dx + dy, dx + dy))
    A[:dx, dx:] = cov.sxy
    A[dx:, :dx] = cov.sxy.T
    B = np.zeros_like(A)
    B[:dx, :dx] = cov.sxx + jitter * np.eye(dx)
    B[dx:, dx:] = cov.syy + jitter * np.eye(dy)

    eig = generalized_eig_spd(A, B)
    W = eig.eigenvectors[:, :d]
    u, v = W[:dx], W[dx:]
    # w^T B w = 1 splits evenly between the views when rho != 0
    u = u / np.sqrt(np.einsum("ij,ik,kj->j", u, B[:dx, :dx], u))
    v = v / np.sqrt(np.einsum("ij,ik,kj->j", v, B[dx:, dx:], v))
    u, v = _orient(u, v)
    return GccaModel(
        u=u,
        v=v,
        gamma=0.0,
        singulars=eig.eigenvalues[:d].copy(),
        x_mean=views.x_mean,
        y_mean=views.y_mean,
        jitter=jitter,
        variant="cca",
    )


class GccaPath:
    """Precomputed whitening and graph term for solving gCCA at many ``gamma``.

    Everything that does not depend on ``gamma`` (the inverse square roots of
    the covariances and the ``X L Y^T`` cross term) is computed once.
    """

    def __init__(self, views, graph, jitter=0.0):
        L = laplacian_matrix(graph)
        if L.shape != (views.n, views.n):
            raise GraphSizeMismatch(f"graph has {L.shape[0]} nodes, data has {views.n} samples")
        cov = covariances(views)
        self.views = views
        self.jitter = jitter
        self.rx = sym_inv_sqrt(cov.sxx, jitter)
        self.ry = sym_inv_sqrt(cov.syy, jitter)
        self.sxy = cov.sxy
        self.cross = (views.x @ L) @ views.y.T

    def whitened(self, gamma):
        return self.rx @ (self.sxy - gamma * self.cross) @ self.ry

    def solve(self, gamma, d):
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        _check_rank_request(d, self.views)
        svd = top_d_svd(self.whitened(gamma), d)
        u, v = _orient(self.rx @ svd.left, self.ry @ svd.right)
        return GccaModel(
            u=u,
            v=v,
            gamma=float(gamma),
            singulars=svd.singulars,
            x_mean=self.views.x_mean,
            y_mean=self.views.y_mean,
            jitter=self.jitter,
        )


def fit_gcca(views, graph, gamma, d, jitter=0.0):
    """Graph-regularized CCA in closed form.

    The canonical matrices are ``Sxx^{-1/2}`` and ``Syy^{-1/2}`` applied to the
    top-``d`` left and right singular vectors of
    ``Sxx^{-1/2} (Sxy - gamma X L Y^T) Syy^{-1/2}``; the attained objective is
    the sum of those singular values.
    """
    return GccaPath(views, graph, jitter).solve(gamma, d)


def graph_term(u, v, views, graph):
    """``Tr(U^T X L Y^T V)``, the quantity the graph regularizer trades off."""
    L = laplacian_matrix(graph)
    return float(np.sum((views.x.T @ u) * (L @ (views.y.T @ v))))


def gcca_objective(model, views, graph, gamma=None):
    """``Tr(U^T Sxy V - gamma U^T X L Y^T V)`` for the model's (or any) U, V."""
    u = np.asarray(model.u, dtype=float)
    v = np.asarray(model.v, dtype=float)
    if u.shape[0] != views.dx or v.shape[0] != views.dy or u.shape[1] != v.shape[1]:
        raise DimensionMismatch(f"U {u.shape} / V {v.shape} do not fit views {views.dx}, {views.dy}")
    L = laplacian_matrix(graph)
    if L.shape != (views.n, views.n):
        raise GraphSizeMismatch(f"graph has {L.shape[0]} nodes, data has {views.n} samples")
    if gamma is None:
        gamma = model.gamma
    p = views.x.T @ u
    q = views.y.T @ v
    return float(np.sum(p * q) / views.n - gamma * np.sum(p * (L @ q)))


def _project(mat, mean, data, name):
    data = as_matrix(data, name)
    if data.shape[0] != mat.shape[0]:
        raise DimensionMismatch(f"{name} has {data.shape[0]} rows, model expects {mat.shape[0]}")
    return mat.T @ (data - mean[:, None])


def project_x(model, x_new):
    """Embed new X-view columns: ``U^T (x - x_mean)``, shape ``d x M``."""
    return _project(model.u, model.x_mean, x_new, "x_new")


def project_y(model, y_new):
    return _project(model.v, model.y_mean, y_new, "y_new")
