"""Dual graph CCA (gdCCA) for the few-samples, many-features regime.

Canonical vectors are expressed through the training samples, ``u = X a`` and
``v = Y b``, so only ``N x N`` Gram matrices of the centered views enter the
solve. A Tikhonov term ``eps`` keeps the problem away from the trivial
solutions of the unregularized dual.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, GraphSizeMismatch
from .graph import laplacian_matrix
from .kernel import KernelPath, kernel_objective
from .matkit import as_matrix


@dataclass(frozen=True)
class DualModel:
    """Dual matrices ``a``, ``b`` (N x d) plus the centered training views."""

    a: np.ndarray
    b: np.ndarray
    gamma: float
    epsilon: float
    singulars: np.ndarray
    x_mean: np.ndarray
    y_mean: np.ndarray
    x_train: np.ndarray
    y_train: np.ndarray
    jitter: float = 0.0
    variant: str = "gdcca"

    @property
    def d(self):
        return self.a.shape[1]

    @property
    def eigvals(self):
        """Squared singular values, i.e. the leading generalized eigenvalues."""
        return self.singulars**2

    @property
    def u(self):
        return self.x_train @ self.a

    @property
    def v(self):
        return self.y_train @ self.b


def linear_grams(views):
    return views.x.T @ views.x, views.y.T @ views.y


def default_epsilon(views):
    """Scale-aware ridge: ``1e-3 * Tr(X^T X) / N``."""
    return 1e-3 * float(np.sum(views.x**2)) / views.n


class DualPath:
    """gdCCA over many ``(gamma, epsilon)`` cells, sharing the Gram eigendecompositions."""

    def __init__(self, views, graph, jitter=0.0):
        kx, ky = linear_grams(views)
        self.views = views
        self.jitter = jitter
        self.path = KernelPath(kx, ky, graph, jitter)

    def solve(self, gamma, epsilon, d):
        a, b, s = self.path.solve(gamma, epsilon, d)
        v = self.views
        return DualModel(
            a=a,
            b=b,
            gamma=float(gamma),
            epsilon=float(epsilon),
            singulars=s,
            x_mean=v.x_mean,
            y_mean=v.y_mean,
            x_train=v.x,
            y_train=v.y,
            jitter=self.jitter,
        )


def fit_gdcca(views, graph, gamma, epsilon, d, jitter=0.0):
    """Fit gdCCA on centered ``views``.

    The columns of ``a`` and ``b`` satisfy
    ``A^T (X^T X)^2 A + eps A^T X^T X A = I`` (and the ``y`` counterpart) and
    attain objective ``singulars.sum()``.
    """
    return DualPath(views, graph, jitter).solve(gamma, epsilon, d)


def gdcca_objective(model, views, graph, gamma=None):
    """``Tr(A^T X^T X (I - gamma L) Y^T Y B)`` for the model's (or any) A, B."""
    a = np.asarray(model.a, dtype=float)
    b = np.asarray(model.b, dtype=float)
    if a.shape[0] != views.n or b.shape[0] != views.n or a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"A {a.shape} / B {b.shape} do not fit N={views.n}")
    if laplacian_matrix(graph).shape != (views.n, views.n):
        raise GraphSizeMismatch("graph size does not match sample count")
    kx, ky = linear_grams(views)
    return kernel_objective(a, b, kx, ky, graph, model.gamma if gamma is None else gamma)


def _project(model, data, side):
    train = model.x_train if side == "x" else model.y_train
    mean = model.x_mean if side == "x" else model.y_mean
    coef = model.a if side == "x" else model.b
    data = as_matrix(data, f"{side}_new")
    if data.shape[0] != train.shape[0]:
        raise DimensionMismatch(f"{side}_new has {data.shape[0]} rows, model expects {train.shape[0]}")
    return coef.T @ (train.T @ (data - mean[:, None]))


def project_x(model, x_new):
    """``A^T X^T (x - x_mean)``; never materializes ``U = X A``."""
    return _project(model, x_new, "x")


def project_y(model, y_new):
    return _project(model, y_new, "y")
