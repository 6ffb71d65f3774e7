"""Estimator facade over the kernel + diffusion-map pipeline.

DiffusionMapClustering follows the conventions of scikit-learn clusterers:
constructor stores hyperparameters untouched, fit(X) computes and stores
fitted state on trailing-underscore attributes, fit_predict(X) returns the
labels.  X rows are flattened FFO fields, three components per grid node, so
datasets assembled with stack_fields plug straight in.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ..errors import ValidationError
from .cluster import cluster
from .diffusion import diffusion_spectrum
from .kernel import (
    DEFAULT_EPSILON,
    KernelMatrix,
    _check_shared_grid,
    _flat,
    kernel_entries_from_vectors,
)


def stack_fields(fields) -> np.ndarray:
    """Stack FFO fields on one shared grid into an (n_samples, 3*n_nodes) X."""
    fields = list(fields)
    if not fields:
        raise ValidationError("no fields to stack")
    for f in fields[1:]:
        _check_shared_grid(fields[0], f)
    return np.stack([_flat(f).ravel() for f in fields])


class DiffusionMapClustering(BaseEstimator, ClusterMixin):
    """Phase discovery by determinant kernel plus diffusion-map clustering.

    Parameters
    ----------
    epsilon : float
        Kernel scale; node factors are 1 - exp(-|det|^2 / epsilon^2).
    dominance_threshold : float
        Eigenvalues above this count as one cluster each.
    ell : int
        Diffusion time used for the embedding scale lambda^ell.
    jobs : int
        Worker threads for the pairwise kernel rows.

    Attributes (after fit)
    ----------
    affinity_matrix_ : (n, n) kernel entries
    eigenvalues_ : descending transition-matrix spectrum
    labels_ : canonical cluster label per sample
    n_clusters_ : number of clusters found
    dominant_count_ : eigenvalues above the dominance threshold
    """

    def __init__(
        self,
        epsilon: float = DEFAULT_EPSILON,
        dominance_threshold: float = 0.99,
        ell: int = 1000,
        jobs: int = 1,
    ):
        self.epsilon = epsilon
        self.dominance_threshold = dominance_threshold
        self.ell = ell
        self.jobs = jobs

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValidationError(f"X must be 2-dimensional, got shape {X.shape}")
        if X.shape[0] < 2:
            raise ValidationError(f"need at least 2 samples, got {X.shape[0]}")
        if X.shape[1] == 0 or X.shape[1] % 3 != 0:
            raise ValidationError(
                f"each row must hold 3 components per node, got {X.shape[1]} features"
            )
        if not np.all(np.isfinite(X)):
            raise ValidationError("X contains non-finite entries")
        if self.epsilon <= 0.0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        vecs = X.reshape(X.shape[0], -1, 3)
        entries = kernel_entries_from_vectors(vecs, self.epsilon, jobs=self.jobs)
        kernel = KernelMatrix(n=X.shape[0], entries=entries, epsilon=float(self.epsilon))
        spectrum = diffusion_spectrum(kernel)
        assignment = cluster(
            spectrum,
            dominance_threshold=self.dominance_threshold,
            ell=self.ell,
        )
        self.affinity_matrix_ = entries
        self.eigenvalues_ = spectrum.eigenvalues
        self.labels_ = assignment.labels
        self.n_clusters_ = assignment.n_clusters
        self.dominant_count_ = assignment.dominant_count
        return self
