"""Unsupervised-learning core: determinant kernel over flattened Floquet
operator fields, diffusion-map spectrum and distances, cluster extraction,
and an independent connected-components oracle."""

from .cluster import (
    METHOD_COMPONENTS,
    METHOD_DIFFUSION,
    ClusterAssignment,
    cluster,
    components_oracle,
)
from .diffusion import DiffusionSpectrum, diffusion_distance, diffusion_spectrum
from .estimator import DiffusionMapClustering, stack_fields
from .kernel import DEFAULT_EPSILON, KernelMatrix, kernel_entry, kernel_matrix

__all__ = [
    "DEFAULT_EPSILON",
    "METHOD_COMPONENTS",
    "METHOD_DIFFUSION",
    "ClusterAssignment",
    "DiffusionMapClustering",
    "DiffusionSpectrum",
    "KernelMatrix",
    "cluster",
    "components_oracle",
    "diffusion_distance",
    "diffusion_spectrum",
    "kernel_entry",
    "kernel_matrix",
    "stack_fields",
]
