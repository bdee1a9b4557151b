"""scikit-learn style estimators over the functional solvers.

These follow the scikit-learn layout, one sample per *row*, and transpose
internally. ``fit`` takes the two views plus either a prebuilt graph (a
:class:`~graphcca.graph.SourceGraph` or a dense adjacency matrix) or class
``labels`` from which the default same-class neighbor graph is built.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from . import cca, dual, kernel
from .graph import SourceGraph, empty_graph, laplacian
from .pipeline import default_graph_builder


def _resolve_graph(graph, labels, n, x_cols, y_cols, variant, n_neighbors):
    if graph is not None:
        if isinstance(graph, SourceGraph):
            return graph
        return laplacian(check_array(graph))
    if labels is not None:
        labels = np.asarray(labels)
        check_consistent_length(labels, np.empty(n))
        return default_graph_builder(variant, n_neighbors)(x_cols, y_cols, labels)
    return empty_graph(n)


class _BaseGraphCCA(TransformerMixin, BaseEstimator):
    _variant = None

    def _validate_views(self, X, Y):
        X = check_array(X, ensure_min_samples=2)
        Y = check_array(Y, ensure_min_samples=2)
        check_consistent_length(X, Y)
        return X.T, Y.T

    def fit(self, X, Y, graph=None, labels=None):
        x, y = self._validate_views(X, Y)
        g = _resolve_graph(graph, labels, x.shape[1], x, y, self._variant, self.n_neighbors)
        self.model_ = self._fit(x, y, g)
        self.n_features_in_ = x.shape[0]
        return self

    def transform(self, X, Y=None):
        """Canonical scores of X (and Y), shape ``(n_samples, n_components)``."""
        check_is_fitted(self, "model_")
        xs = self._project_x(check_array(X).T).T
        if Y is None:
            return xs
        return xs, self._project_y(check_array(Y).T).T

    def fit_transform(self, X, Y=None, graph=None, labels=None):
        if Y is None:
            raise ValueError("both views are required to fit")
        return self.fit(X, Y, graph=graph, labels=labels).transform(X, Y)

    @property
    def singular_values_(self):
        check_is_fitted(self, "model_")
        return self.model_.singulars


class GCCA(_BaseGraphCCA):
    """Primal graph CCA. ``gamma=0`` with no graph is standard CCA."""

    _variant = "gcca"

    def __init__(self, n_components=2, gamma=0.0, jitter=0.0, n_neighbors=None):
        self.n_components = n_components
        self.gamma = gamma
        self.jitter = jitter
        self.n_neighbors = n_neighbors

    def _fit(self, x, y, graph):
        model = cca.fit_gcca(cca.center(x, y), graph, self.gamma, self.n_components, self.jitter)
        self.x_weights_ = model.u
        self.y_weights_ = model.v
        return model

    def _project_x(self, x):
        return cca.project_x(self.model_, x)

    def _project_y(self, y):
        return cca.project_y(self.model_, y)


class GDCCA(_BaseGraphCCA):
    """Dual graph CCA; ``epsilon=None`` picks ``1e-3 * Tr(X^T X) / N``."""

    _variant = "gdcca"

    def __init__(self, n_components=2, gamma=0.0, epsilon=None, jitter=0.0, n_neighbors=None):
        self.n_components = n_components
        self.gamma = gamma
        self.epsilon = epsilon
        self.jitter = jitter
        self.n_neighbors = n_neighbors

    def _fit(self, x, y, graph):
        views = cca.center(x, y)
        eps = dual.default_epsilon(views) if self.epsilon is None else self.epsilon
        model = dual.fit_gdcca(views, graph, self.gamma, eps, self.n_components, self.jitter)
        self.dual_coef_x_ = model.a
        self.dual_coef_y_ = model.b
        return model

    def _project_x(self, x):
        return dual.project_x(self.model_, x)

    def _project_y(self, y):
        return dual.project_y(self.model_, y)


class GKCCA(_BaseGraphCCA):
    """Graph kernel CCA with linear or Gaussian kernels per view."""

    _variant = "gkcca"

    def __init__(
        self,
        n_components=2,
        gamma=0.0,
        epsilon=1.0,
        kernel_x="gaussian",
        bandwidth_x="median",
        kernel_y="gaussian",
        bandwidth_y="median",
        jitter=0.0,
        n_neighbors=None,
    ):
        self.n_components = n_components
        self.gamma = gamma
        self.epsilon = epsilon
        self.kernel_x = kernel_x
        self.bandwidth_x = bandwidth_x
        self.kernel_y = kernel_y
        self.bandwidth_y = bandwidth_y
        self.jitter = jitter
        self.n_neighbors = n_neighbors

    def _fit(self, x, y, graph):
        model = kernel.fit_gkcca_views(
            x,
            y,
            graph,
            self.gamma,
            self.epsilon,
            self.n_components,
            kernel.KernelSpec(self.kernel_x, self.bandwidth_x),
            kernel.KernelSpec(self.kernel_y, self.bandwidth_y),
            self.jitter,
        )
        self.dual_coef_x_ = model.a
        self.dual_coef_y_ = model.b
        return model

    def _project_x(self, x):
        return kernel.project_kernel_x(self.model_, x)

    def _project_y(self, y):
        return kernel.project_kernel_y(self.model_, y)
