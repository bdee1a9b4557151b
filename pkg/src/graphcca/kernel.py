"""Kernel machinery and graph kernel CCA (gKCCA).

Gram matrices are ``N x N`` with one training sample per row/column. The
solver works on the numerically nonzero eigenspace of each centered Gram
matrix: centering always leaves the all-ones vector in the null space, so the
inverse square roots in the closed form are taken as pseudo-inverses there.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import (
    BandwidthNonPositive,
    DegenerateData,
    DimensionMismatch,
    EmptyDictionary,
    EpsilonNonPositive,
    GraphSizeMismatch,
    RankRequestTooLarge,
    SingularKernel,
)
from .graph import laplacian_matrix
from .matkit import RANK_RTOL, as_matrix, sign_fix, sym_eig, symmetrize, top_d_svd

logger = logging.getLogger(__name__)

MEDIAN = "median"


@dataclass(frozen=True)
class KernelSpec:
    """``kind`` is ``"linear"`` or ``"gaussian"``; ``bandwidth`` a positive float or ``"median"``.

    The Gaussian kernel is ``exp(-||a - b||^2 / (2 sigma^2))``.
    """

    kind: str = "gaussian"
    bandwidth: object = MEDIAN

    def __post_init__(self):
        if self.kind not in ("linear", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and self.bandwidth != MEDIAN:
            if not float(self.bandwidth) > 0:
                raise BandwidthNonPositive(f"bandwidth must be positive, got {self.bandwidth}")

    @property
    def resolved(self):
        return self.kind == "linear" or self.bandwidth != MEDIAN

    def resolve(self, data):
        """Return a copy with the median heuristic evaluated on ``data`` (D x N)."""
        if self.resolved:
            return self
        return replace(self, bandwidth=median_bandwidth(data))


@dataclass(frozen=True)
class MultiKernelSpec:
    """Fixed-weight kernel combination ``sum_m w_m K_m``."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))


def median_bandwidth(data):
    """Lower median of the pairwise Euclidean distances between columns."""
    data = as_matrix(data, "data")
    if data.shape[1] < 2:
        raise DegenerateData("median bandwidth needs at least two samples")
    dist = np.sort(pdist(data.T))
    if dist[-1] == 0:
        raise DegenerateData("all samples coincide")
    return float(dist[(dist.size - 1) // 2])


def _sq_dists(a, b):
    return cdist(a.T, b.T, "sqeuclidean")


def cross_gram(a, b, spec):
    """Kernel values between columns of ``a`` (rows of output) and ``b``."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"feature counts differ: {a.shape[0]} vs {b.shape[0]}")
    if spec.kind == "linear":
        return a.T @ b
    if not spec.resolved:
        raise BandwidthNonPositive("bandwidth is unresolved; call spec.resolve(data) first")
    sigma = float(spec.bandwidth)
    if sigma <= 0:
        raise BandwidthNonPositive(f"bandwidth must be positive, got {sigma}")
    return np.exp(-_sq_dists(a, b) / (2.0 * sigma**2))


def gram(data, spec):
    """Uncentered Gram matrix of the columns of ``data``."""
    data = as_matrix(data, "data")
    spec = spec.resolve(data)
    K = cross_gram(data, data, spec)
    K = (K + K.T) / 2
    if spec.kind == "gaussian":
        np.fill_diagonal(K, 1.0)
    return K


def center_kernel(kbar):
    """Double-center a Gram matrix (remove row, column and add grand means)."""
    K = symmetrize(kbar, "kernel")
    col = K.mean(axis=0)
    row = K.mean(axis=1)
    Kc = K - row[:, None] - col[None, :] + K.mean()
    return (Kc + Kc.T) / 2


def combine_kernels(spec, data=None):
    """Weighted sum of component Gram matrices.

    Components are ``(kernel, weight)`` pairs where ``kernel`` is either a
    precomputed ``N x N`` matrix or a :class:`KernelSpec` evaluated on
    ``data``.
    """
    components = spec.components if isinstance(spec, MultiKernelSpec) else tuple(spec)
    if not components:
        raise EmptyDictionary("no kernels to combine")
    weights = np.array([float(w) for _, w in components])
    if np.any(weights < 0) or not np.any(weights > 0):
        raise ValueError("weights must be nonnegative with at least one positive")
    total = None
    for (kernel, _), w in zip(components, weights):
        K = gram(data, kernel) if isinstance(kernel, KernelSpec) else as_matrix(kernel, "kernel")
        if total is not None and K.shape != total.shape:
            raise DimensionMismatch(f"kernel shapes differ: {K.shape} vs {total.shape}")
        total = w * K if total is None else total + w * K
    return total


@dataclass(frozen=True)
class KernelModel:
    """Dual coefficient matrices ``a`` and ``b`` (N x d) of a fitted gKCCA.

    Out-of-sample projection needs the training data and kernel specs, which
    are attached by :func:`fit_gkcca_views`; models fitted straight from Gram
    matrices carry ``None`` there.
    """

    a: np.ndarray
    b: np.ndarray
    gamma: float
    epsilon: float
    singulars: np.ndarray
    kernel_x: KernelSpec = None
    kernel_y: KernelSpec = None
    x_train: np.ndarray = None
    y_train: np.ndarray = None
    kx_col_mean: np.ndarray = None
    ky_col_mean: np.ndarray = None
    kx_grand_mean: float = 0.0
    ky_grand_mean: float = 0.0
    jitter: float = 0.0
    variant: str = "gkcca"

    @property
    def d(self):
        return self.a.shape[1]

    @property
    def eigvals(self):
        return self.singulars**2


def _eigenspace(K, jitter, name):
    K = symmetrize(K, name)
    if jitter:
        K = K + jitter * np.eye(K.shape[0])
    eig = sym_eig(K)
    lam = eig.eigenvalues
    if lam.size == 0 or lam[0] <= 0:
        raise SingularKernel(f"{name} has no positive eigenvalues")
    keep = lam > RANK_RTOL * lam[0]
    if not np.all(keep):
        logger.debug("%s: using %d of %d eigenpairs (pseudo-inverse)", name, keep.sum(), keep.size)
    return eig.eigenvectors[:, keep], lam[keep]


class KernelPath:
    """gKCCA solver with the ``gamma``/``epsilon``-independent work done once.

    With ``Kx = Qx diag(lx) Qx^T`` on its nonzero eigenspace, the closed-form
    matrix ``(Kx+eps)^{-1/2} Kx^{1/2} (I - gamma L) Ky^{1/2} (Ky+eps)^{-1/2}``
    reduces to ``Fx Qx^T (I - gamma L) Qy Fy`` with ``F = sqrt(l / (l + eps))``,
    so every grid cell costs one small SVD.
    """

    def __init__(self, kx, ky, graph, jitter=0.0):
        kx = as_matrix(kx, "kx")
        ky = as_matrix(ky, "ky")
        n = kx.shape[0]
        if ky.shape != kx.shape or kx.shape != (n, n):
            raise DimensionMismatch(f"Gram shapes {kx.shape} and {ky.shape} must be equal and square")
        L = laplacian_matrix(graph)
        if L.shape != (n, n):
            raise GraphSizeMismatch(f"graph has {L.shape[0]} nodes, kernels have {n}")
        self.n = n
        self.jitter = jitter
        self.qx, self.lx = _eigenspace(kx, jitter, "kx")
        self.qy, self.ly = _eigenspace(ky, jitter, "ky")
        self.inner = self.qx.T @ self.qy
        self.graph_inner = self.qx.T @ (L @ self.qy)

    def whitened(self, gamma, epsilon):
        fx = np.sqrt(self.lx / (self.lx + epsilon))
        fy = np.sqrt(self.ly / (self.ly + epsilon))
        return fx[:, None] * (self.inner - gamma * self.graph_inner) * fy[None, :]

    def solve(self, gamma, epsilon, d):
        """Return ``(A, B, singulars)`` for one hyperparameter cell."""
        if not epsilon > 0:
            raise EpsilonNonPositive(f"epsilon must be positive, got {epsilon}")
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if d < 1 or d > self.n:
            raise RankRequestTooLarge(f"d={d} must lie in [1, N] = [1, {self.n}]")
        rank = min(self.lx.size, self.ly.size)
        if d > rank:
            raise SingularKernel(f"d={d} exceeds the numerical rank {rank} of the Gram matrices")
        svd = top_d_svd(self.whitened(gamma, epsilon), d)
        a = self.qx @ (svd.left / np.sqrt(self.lx * (self.lx + epsilon))[:, None])
        b = self.qy @ (svd.right / np.sqrt(self.ly * (self.ly + epsilon))[:, None])
        a, b = sign_fix(a, b)
        return a, b, svd.singulars


def fit_gkcca(kx, ky, graph, gamma, epsilon, d, jitter=0.0):
    """Graph kernel CCA from centered Gram matrices.

    Returns a :class:`KernelModel` whose ``a``/``b`` satisfy
    ``A^T Kx^2 A + eps A^T Kx A = I`` (and the ``y`` counterpart); its
    objective ``Tr(A^T Kx (I - gamma L) Ky B)`` equals ``singulars.sum()``.
    """
    a, b, s = KernelPath(kx, ky, graph, jitter).solve(gamma, epsilon, d)
    return KernelModel(a=a, b=b, gamma=float(gamma), epsilon=float(epsilon), singulars=s, jitter=jitter)


def fit_gkcca_views(x, y, graph, gamma, epsilon, d, kernel_x=KernelSpec(), kernel_y=KernelSpec(), jitter=0.0):
    """Build and center Gram matrices from raw views, fit, and keep what projection needs."""
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"views disagree on sample count: {x.shape[1]} vs {y.shape[1]}")
    kernel_x = kernel_x.resolve(x)
    kernel_y = kernel_y.resolve(y)
    kbx, kby = gram(x, kernel_x), gram(y, kernel_y)
    model = fit_gkcca(center_kernel(kbx), center_kernel(kby), graph, gamma, epsilon, d, jitter)
    return attach_training(model, x, y, kernel_x, kernel_y, kbx, kby)


def attach_training(model, x, y, kernel_x, kernel_y, kbx=None, kby=None):
    if kbx is None:
        kbx = gram(x, kernel_x)
    if kby is None:
        kby = gram(y, kernel_y)
    return replace(
        model,
        kernel_x=kernel_x,
        kernel_y=kernel_y,
        x_train=x,
        y_train=y,
        kx_col_mean=kbx.mean(axis=0),
        ky_col_mean=kby.mean(axis=0),
        kx_grand_mean=float(kbx.mean()),
        ky_grand_mean=float(kby.mean()),
    )


def centered_cross_kernel(new, train, spec, col_mean, grand_mean):
    """Cross-kernel ``M x N`` centered with the training statistics."""
    kc = cross_gram(new, train, spec)
    return kc - col_mean[None, :] - kc.mean(axis=1, keepdims=True) + grand_mean


def _project(model, data, side):
    train = model.x_train if side == "x" else model.y_train
    if train is None:
        raise ValueError("model carries no training data; fit with fit_gkcca_views")
    data = as_matrix(data, f"{side}_new")
    if data.shape[0] != train.shape[0]:
        raise DimensionMismatch(f"{side}_new has {data.shape[0]} rows, model expects {train.shape[0]}")
    if side == "x":
        kc = centered_cross_kernel(data, train, model.kernel_x, model.kx_col_mean, model.kx_grand_mean)
        return (kc @ model.a).T
    kc = centered_cross_kernel(data, train, model.kernel_y, model.ky_col_mean, model.ky_grand_mean)
    return (kc @ model.b).T


def project_kernel_x(model, x_new):
    """Embed new X-view columns (``D x M``) into ``d x M`` canonical space."""
    return _project(model, x_new, "x")


def project_kernel_y(model, y_new):
    return _project(model, y_new, "y")


def kernel_objective(a, b, kx, ky, graph, gamma):
    """``Tr(A^T Kx Ky B - gamma A^T Kx L Ky B)``."""
    L = laplacian_matrix(graph)
    p = kx @ a
    q = ky @ b
    return float(np.sum(p * q) - gamma * np.sum(p * (L @ q)))
