"""Common-source graphs: adjacency construction, Laplacian, spectral filters."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ClassTooSmall, DimensionMismatch, UnsupportedFilter, ZeroNormSample
from .matkit import RANK_RTOL, as_matrix, sym_eig, symmetrize


@dataclass(frozen=True)
class SourceGraph:
    """Weighted undirected graph over the N common sources.

    Attributes
    ----------
    weights : (N, N) symmetric adjacency ``W`` with zero diagonal.
    degrees : (N,) row sums of ``W``.
    laplacian : (N, N) ``diag(degrees) - W``.
    """

    weights: np.ndarray
    degrees: np.ndarray
    laplacian: np.ndarray

    @property
    def n(self):
        return self.weights.shape[0]

    @property
    def max_degree(self):
        return float(self.degrees.max()) if self.n else 0.0


def laplacian(W):
    """Build a :class:`SourceGraph` from a symmetric adjacency matrix.

    Self-loops are dropped; they cancel in ``D - W`` anyway.
    """
    W = symmetrize(W, "adjacency")
    W = W.copy()
    np.fill_diagonal(W, 0.0)
    deg = W.sum(axis=1)
    return SourceGraph(weights=W, degrees=deg, laplacian=np.diag(deg) - W)


def empty_graph(n):
    return laplacian(np.zeros((n, n)))


def laplacian_matrix(graph):
    """Return the regularizer matrix for a graph or an already-filtered matrix."""
    if isinstance(graph, SourceGraph):
        return graph.laplacian
    return as_matrix(graph, "laplacian")


def _class_members(labels, k):
    labels = np.asarray(labels)
    groups = {}
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size < k + 1:
            raise ClassTooSmall(cls, members.size, k + 1)
        groups[cls] = members
    return groups


def _or_rule(neighbor_of, n):
    mask = np.zeros((n, n), dtype=bool)
    for j, nbrs in neighbor_of.items():
        mask[nbrs, j] = True
    return mask | mask.T


def cosine_class_graph(S, labels, k):
    """Cosine-weighted k-nearest-neighbor graph restricted to same-class pairs.

    ``S`` holds one stacked source per column. Neighborhoods use Euclidean
    distance between columns, ties going to the lower sample index; an edge is
    kept when either endpoint lists the other among its ``k`` neighbors.
    """
    S = as_matrix(S, "S")
    n = S.shape[1]
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise DimensionMismatch(f"{labels.shape[0]} labels for {n} samples")
    if k < 1:
        raise ValueError("k must be at least 1")
    norms = np.linalg.norm(S, axis=0)
    if np.any(norms == 0):
        raise ZeroNormSample(f"sample {int(np.flatnonzero(norms == 0)[0])} has zero norm")

    neighbor_of = {}
    for members in _class_members(labels, k).values():
        cols = S[:, members].T
        dist = cdist(cols, cols)
        np.fill_diagonal(dist, np.inf)
        order = np.argsort(dist, axis=0, kind="stable")[:k]
        for pos, j in enumerate(members):
            neighbor_of[j] = members[order[:, pos]]
    mask = _or_rule(neighbor_of, n)

    unit = S / norms
    W = np.where(mask, unit.T @ unit, 0.0)
    W = (W + W.T) / 2
    return laplacian(W)


def kernel_class_graph(Ks, labels, k1):
    """Kernel-weighted same-class neighbor graph; larger kernel value means nearer."""
    Ks = symmetrize(Ks, "Ks")
    n = Ks.shape[0]
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise DimensionMismatch(f"{labels.shape[0]} labels for {n} samples")
    if k1 < 1:
        raise ValueError("k1 must be at least 1")

    neighbor_of = {}
    for members in _class_members(labels, k1).values():
        sim = Ks[np.ix_(members, members)].copy()
        np.fill_diagonal(sim, -np.inf)
        order = np.argsort(-sim, axis=0, kind="stable")[:k1]
        for pos, j in enumerate(members):
            neighbor_of[j] = members[order[:, pos]]
    mask = _or_rule(neighbor_of, n)
    return laplacian(np.where(mask, Ks, 0.0))


_FILTERS = {
    "identity": lambda lam: lam,
    "power": lambda lam, p: lam**p,
    "exponential": lambda lam, t: np.exp(t * lam),
}


def spectral_filter(graph, kind, **params):
    """Apply ``r`` to the Laplacian spectrum: ``sum_i r(lam_i) u_i u_i^T``.

    Supported ``kind`` values: ``"identity"``, ``"power"`` (``p > 0``) and
    ``"exponential"`` (``t > 0``, ``r(lam) = exp(t * lam)``). The result can
    be passed to any solver in place of the graph.
    """
    if kind not in _FILTERS:
        raise UnsupportedFilter(f"unknown filter {kind!r}; expected one of {sorted(_FILTERS)}")
    L = laplacian_matrix(graph)
    if kind == "identity":
        return symmetrize(L).copy()
    if kind == "power":
        p = float(params.get("p", 0))
        if p <= 0:
            raise UnsupportedFilter("power filter needs p > 0")
        args = (p,)
    else:
        t = float(params.get("t", 0))
        if t <= 0:
            raise UnsupportedFilter("exponential filter needs t > 0")
        args = (t,)

    eig = sym_eig(L)
    lam = eig.eigenvalues.copy()
    top = np.max(np.abs(lam)) if lam.size else 0.0
    # roundoff negatives on a PSD Laplacian
    lam[np.abs(lam) <= RANK_RTOL * max(top, 1.0) * lam.size] = 0.0
    if kind == "power" and np.any(lam < 0):
        raise UnsupportedFilter("power filter requires a positive semidefinite Laplacian")
    r = _FILTERS[kind](lam, *args)
    Q = eig.eigenvectors
    out = (Q * r) @ Q.T
    return (out + out.T) / 2
