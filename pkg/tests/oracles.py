"""Independent reference computations used by the tests.

These deliberately take different numerical routes from the library:
nonsymmetric eigensolvers instead of SVDs, Cholesky instead of symmetric
square roots, and plain Python loops for anything combinatorial.
"""

import numpy as np
import scipy.linalg


def random_views(rng, n, dx, dy, shared=2, noise=1.0):
    """Centered-ish two-view data with a few shared latent directions."""
    s = rng.normal(size=(shared, n))
    x = rng.normal(size=(dx, shared)) @ s + noise * rng.normal(size=(dx, n))
    y = rng.normal(size=(dy, shared)) @ s + noise * rng.normal(size=(dy, n))
    return x, y


def random_adjacency(rng, n, density=0.3, negative=False):
    mask = rng.random((n, n)) < density
    mask = np.triu(mask, 1)
    mask = mask | mask.T
    W = rng.random((n, n))
    if negative:
        W = W - 0.3
    W = (W + W.T) / 2
    return np.where(mask, W, 0.0)


def random_spd(rng, n, cond=10.0):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    w = np.exp(rng.uniform(0.0, np.log(cond), size=n))
    return (Q * w) @ Q.T


def orthonormal(rng, rows, cols):
    Q, _ = np.linalg.qr(rng.normal(size=(rows, cols)))
    return Q


def random_feasible(rng, sxx, syy, d):
    """Random (U, V) with U^T Sxx U = I and V^T Syy V = I, built by Cholesky."""
    lx = np.linalg.cholesky(sxx)
    ly = np.linalg.cholesky(syy)
    u = scipy.linalg.solve_triangular(lx.T, orthonormal(rng, sxx.shape[0], d), lower=False)
    v = scipy.linalg.solve_triangular(ly.T, orthonormal(rng, syy.shape[0], d), lower=False)
    return u, v


def random_feasible_dual(rng, kx, ky, eps, d):
    """Random (A, B) with A^T (Kx^2 + eps Kx) A = I on the range of Kx."""

    def side(K):
        w, Q = np.linalg.eigh(K)
        keep = w > 1e-10 * w.max()
        w, Q = w[keep], Q[:, keep]
        Z = orthonormal(rng, w.size, d)
        return Q @ (Z / np.sqrt(w * w + eps * w)[:, None])

    return side(kx), side(ky)


def cca_block_oracle(x, y, d):
    """Canonical correlations from the block generalized eigenproblem, solved
    as a general nonsymmetric problem ``B^{-1} A w = rho w``."""
    xc = x - x.mean(axis=1, keepdims=True)
    yc = y - y.mean(axis=1, keepdims=True)
    n = x.shape[1]
    sxx, syy, sxy = xc @ xc.T / n, yc @ yc.T / n, xc @ yc.T / n
    dx, dy = x.shape[0], y.shape[0]
    A = np.block([[np.zeros((dx, dx)), sxy], [sxy.T, np.zeros((dy, dy))]])
    B = scipy.linalg.block_diag(sxx, syy)
    w, W = scipy.linalg.eig(A, B)
    order = np.argsort(-w.real)[:d]
    W = W[:, order].real
    u, v = W[:dx], W[dx:]
    u = u / np.sqrt(np.einsum("ij,ik,kj->j", u, sxx, u))
    v = v / np.sqrt(np.einsum("ij,ik,kj->j", v, syy, v))
    return w.real[order], u, v


def sequential_cca_oracle(x, y, d=2):
    """Canonical pairs one at a time: each new pair maximizes correlation
    subject to being uncorrelated with the earlier ones."""
    xc = x - x.mean(axis=1, keepdims=True)
    yc = y - y.mean(axis=1, keepdims=True)
    n = x.shape[1]
    sxx, syy, sxy = xc @ xc.T / n, yc @ yc.T / n, xc @ yc.T / n
    us, vs, rhos = [], [], []
    for _ in range(d):
        # feasible directions: orthogonal (in Sxx / Syy) to earlier pairs
        Px = scipy.linalg.null_space(np.array([sxx @ u for u in us])) if us else np.eye(x.shape[0])
        Py = scipy.linalg.null_space(np.array([syy @ v for v in vs])) if vs else np.eye(y.shape[0])
        a = Px.T @ sxx @ Px
        b = Py.T @ syy @ Py
        c = Px.T @ sxy @ Py
        M = np.linalg.solve(a, c) @ np.linalg.solve(b, c.T)
        w, Z = np.linalg.eig(M)
        i = int(np.argmax(w.real))
        zu = Z[:, i].real
        zv = np.linalg.solve(b, c.T @ zu)
        u, v = Px @ zu, Py @ zv
        u = u / np.sqrt(u @ sxx @ u)
        v = v / np.sqrt(v @ syy @ v)
        if u @ sxy @ v < 0:
            v = -v
        us.append(u)
        vs.append(v)
        rhos.append(float(u @ sxy @ v))
    return np.array(rhos), np.array(us).T, np.array(vs).T


def dual_eig_oracle(kx, ky, L, gamma, eps, d):
    """Top ``d`` solutions of the dual eigenproblem

        (I - gamma L) Ky (Ky + eps I)^{-1} (I - gamma L) Kx alpha = lam^2 (Kx + eps I) alpha

    via a dense nonsymmetric eigensolve. Returns ``(lam^2, Kx alpha)`` with
    each alpha normalized so ``alpha^T (Kx^2 + eps Kx) alpha = 1``.
    """
    n = kx.shape[0]
    G = np.eye(n) - gamma * L
    lhs = G @ ky @ np.linalg.solve(ky + eps * np.eye(n), G @ kx)
    w, Z = scipy.linalg.eig(lhs, kx + eps * np.eye(n))
    order = np.argsort(-w.real)[:d]
    lam2 = w.real[order]
    Z = Z[:, order].real
    norms = np.sqrt(np.einsum("ij,ij->j", Z, (kx @ kx + eps * kx) @ Z))
    return lam2, kx @ (Z / norms)


def decoupled_dual_eig(ky, L, gamma):
    """Eigenvalues of ``Ky^{-1} (I - gamma L)^2 Ky`` (unregularized, invertible Ky)."""
    G = np.eye(ky.shape[0]) - gamma * L
    return np.sort(np.linalg.eigvals(np.linalg.solve(ky, G @ G @ ky)).real)[::-1]


def knn_oracle(train, labels, test, k):
    """Exhaustive sort: order by (squared distance, index), vote, and on a
    vote tie pick the tied class that appears first in that order."""
    out = []
    for t in test.T:
        ranked = sorted(
            (float(sum((a - b) ** 2 for a, b in zip(t, col))), i) for i, col in enumerate(train.T)
        )[:k]
        votes = {}
        for _, i in ranked:
            votes[labels[i]] = votes.get(labels[i], 0) + 1
        top = max(votes.values())
        out.append(next(labels[i] for _, i in ranked if votes[labels[i]] == top))
    return np.array(out)


def neighbor_graph_oracle(S, labels, k, similarity=None):
    """Same-class k-neighbor or-rule adjacency by exhaustive per-node sorting.

    With ``similarity`` (an N x N matrix) neighbors are ranked by descending
    similarity and edge weights are the similarity; otherwise by Euclidean
    distance between columns of ``S`` with cosine weights.
    """
    n = len(labels)
    edges = set()
    for j in range(n):
        cand = []
        for i in range(n):
            if i == j or labels[i] != labels[j]:
                continue
            if similarity is None:
                key = float(np.sqrt(np.sum((S[:, i] - S[:, j]) ** 2)))
            else:
                key = -float(similarity[i, j])
            cand.append((key, i))
        for _, i in sorted(cand)[:k]:
            edges.add((min(i, j), max(i, j)))
    W = np.zeros((n, n))
    for i, j in edges:
        if similarity is None:
            w = S[:, i] @ S[:, j] / (np.linalg.norm(S[:, i]) * np.linalg.norm(S[:, j]))
        else:
            w = similarity[i, j]
        W[i, j] = W[j, i] = w
    return W


def principal_angle_max(A, B):
    """Largest principal angle between the column spans of A and B."""
    qa = scipy.linalg.orth(A)
    qb = scipy.linalg.orth(B)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


def match_sign(ref, other):
    """Flip columns of ``other`` to agree in sign with ``ref``."""
    signs = np.sign(np.sum(ref * other, axis=0))
    signs[signs == 0] = 1.0
    return other * signs
