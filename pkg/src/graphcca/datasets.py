"""Fixture generators: downsampled MNIST and synthetic class-structured views."""

import numpy as np

from .io import load_idx


def area_weights(n_in, n_out):
    """``n_out x n_in`` box-filter weights; each output cell averages the input
    cells it overlaps, weighted by overlap length."""
    edges = np.linspace(0.0, n_in, n_out + 1)
    W = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo, hi = edges[i], edges[i + 1]
        for j in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            W[i, j] = max(0.0, min(hi, j + 1) - max(lo, j))
    return W / W.sum(axis=1, keepdims=True)


def resize_images(images, shape):
    """Area-average resize of a stack of images ``(N, rows, cols)``.

    For integer factors this is plain block averaging (28 -> 14 averages 2x2
    blocks); 28 -> 20 spreads each output pixel over fractional input cells.
    """
    images = np.asarray(images, dtype=float)
    R = area_weights(images.shape[1], shape[0])
    C = area_weights(images.shape[2], shape[1])
    return np.einsum("ij,njk,lk->nil", R, images, C)


def mnist_desk(images_path, labels_path, size=20):
    """Load IDX digits and resize them to ``size x size``; returns ``(D x N, labels)``."""
    flat, labels = load_idx(images_path, labels_path)
    side = int(round(np.sqrt(flat.shape[0])))
    stack = flat.T.reshape(-1, side, side)
    small = resize_images(stack, (size, size))
    return np.ascontiguousarray(small.reshape(small.shape[0], -1).T), labels


def synthetic_views(n_classes=4, n_per_class=30, dx=10, dy=8, rho=3, noise=0.5, seed=0):
    """Two noisy linear views of class-clustered latent sources.

    Returns ``(x, y, labels)`` with ``x`` of shape ``dx x N`` and ``y`` of
    shape ``dy x N``.
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=2.0, size=(n_classes, rho))
    labels = np.repeat(np.arange(n_classes), n_per_class)
    s = centers[labels].T + rng.normal(size=(rho, labels.size))
    x = rng.normal(size=(dx, rho)) @ s + noise * rng.normal(size=(dx, labels.size))
    y = rng.normal(size=(dy, rho)) @ s + noise * rng.normal(size=(dy, labels.size))
    return x, y, labels
