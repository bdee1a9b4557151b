"""Graph-regularized canonical correlation analysis: primal, dual and kernel forms."""

from .cca import GccaModel, PairedViews, center, fit_cca, fit_gcca, gcca_objective, project_x, project_y
from .dual import DualModel, fit_gdcca
from .errors import GraphCCAError
from .estimators import GCCA, GDCCA, GKCCA
from .graph import SourceGraph, cosine_class_graph, empty_graph, kernel_class_graph, laplacian, spectral_filter
from .kernel import KernelModel, KernelSpec, center_kernel, fit_gkcca, fit_gkcca_views, gram, median_bandwidth

__all__ = [
    "GCCA",
    "GDCCA",
    "GKCCA",
    "DualModel",
    "GccaModel",
    "GraphCCAError",
    "KernelModel",
    "KernelSpec",
    "PairedViews",
    "SourceGraph",
    "center",
    "center_kernel",
    "cosine_class_graph",
    "empty_graph",
    "fit_cca",
    "fit_gcca",
    "fit_gdcca",
    "fit_gkcca",
    "fit_gkcca_views",
    "gcca_objective",
    "gram",
    "kernel_class_graph",
    "laplacian",
    "median_bandwidth",
    "project_x",
    "project_y",
    "spectral_filter",
]
