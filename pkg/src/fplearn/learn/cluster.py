"""Cluster extraction from a diffusion spectrum, plus a spectral-free oracle.

The number of phases is read off as the count of eigenvalues above a
dominance threshold; samples are embedded in the dominant eigenvector
coordinates scaled by lambda^ell and merged agglomeratively.  For a clean
phase dataset the embedding collapses each phase to a point, so the merge
cutoff can sit orders of magnitude below the between-phase separation.

components_oracle ignores the spectrum entirely and reads connected
components of the thresholded kernel graph; agreement between the two routes
is the library's internal consistency check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist
from sklearn.cluster import AgglomerativeClustering

from ..errors import AmbiguousSpectrum, ValidationError
from .diffusion import DiffusionSpectrum
from .kernel import KernelMatrix

METHOD_DIFFUSION = "DiffusionMap"
METHOD_COMPONENTS = "ConnectedComponents"

# Eigenvalues in [AMBIGUOUS_FLOOR, dominance_threshold] are neither clearly
# dominant nor clearly decayed; clustering refuses rather than guessing.
AMBIGUOUS_FLOOR = 0.9

# Embedding diameters at rounding-noise scale mean every sample sits at the
# same point: a single cluster, with no meaningful merge cutoff to apply.
DIAMETER_FLOOR = 1e-8

MERGE_CUTOFF_RATIO = 1e-3


@dataclass(frozen=True)
class ClusterAssignment:
    """Phase labels for one dataset, labels in [0, n_clusters).

    Labels are canonical: cluster 0 is the one containing the first sample,
    cluster 1 the next distinct one to appear, and so on.  dominant_count is
    the number of eigenvalues above the dominance threshold (None for the
    components oracle, which uses no spectrum).
    """

    labels: np.ndarray
    n_clusters: int
    method: str
    dominant_count: Optional[int] = None


def _canonical_labels(raw: np.ndarray) -> tuple[np.ndarray, int]:
    seen: dict[int, int] = {}
    labels = np.empty(len(raw), dtype=int)
    for idx, lab in enumerate(raw):
        labels[idx] = seen.setdefault(int(lab), len(seen))
    return labels, len(seen)


def cluster(
    spectrum: DiffusionSpectrum,
    dominance_threshold: float = 0.99,
    ell: int = 1000,
) -> ClusterAssignment:
    """Group samples by phase from the dominant diffusion eigenvectors.

    Raises AmbiguousSpectrum when any eigenvalue falls inside
    [0.9, dominance_threshold] (no clean spectral gap), or when the embedding
    does not split into exactly as many groups as there are dominant
    eigenvalues.
    """
    if not 0.0 < dominance_threshold < 1.0:
        raise ValidationError(f"dominance threshold must be in (0, 1), got {dominance_threshold}")
    if not isinstance(ell, (int, np.integer)) or ell < 1:
        raise ValidationError(f"ell must be an integer >= 1, got {ell!r}")
    lam = spectrum.eigenvalues
    in_band = (lam >= AMBIGUOUS_FLOOR) & (lam <= dominance_threshold)
    if np.any(in_band):
        raise AmbiguousSpectrum(
            f"eigenvalues {lam[in_band]} inside [{AMBIGUOUS_FLOOR}, {dominance_threshold}]; "
            "no clean dominance gap"
        )
    dominant = int(np.sum(lam > dominance_threshold))

    scale = lam[:dominant] ** ell
    embedding = spectrum.vectors[:, :dominant] * scale[None, :]
    n = embedding.shape[0]
    if n == 1:
        return ClusterAssignment(
            labels=np.zeros(1, dtype=int), n_clusters=1,
            method=METHOD_DIFFUSION, dominant_count=dominant,
        )
    diameter = float(pdist(embedding).max())
    if diameter < DIAMETER_FLOOR:
        if dominant != 1:
            raise AmbiguousSpectrum(
                f"{dominant} dominant eigenvalues but the embedding has collapsed "
                "to a single point"
            )
        return ClusterAssignment(
            labels=np.zeros(n, dtype=int), n_clusters=1,
            method=METHOD_DIFFUSION, dominant_count=dominant,
        )
    merge = AgglomerativeClustering(
        n_clusters=None,
        distance_threshold=MERGE_CUTOFF_RATIO * diameter,
        linkage="single",
    )
    labels, found = _canonical_labels(merge.fit_predict(embedding))
    if found != dominant:
        raise AmbiguousSpectrum(
            f"{dominant} dominant eigenvalues but the embedding splits into "
            f"{found} groups at the merge cutoff"
        )
    return ClusterAssignment(
        labels=labels, n_clusters=found,
        method=METHOD_DIFFUSION, dominant_count=dominant,
    )


def components_oracle(kernel: KernelMatrix, edge_threshold: float = 0.5) -> ClusterAssignment:
    """Connected components of the graph with edges where K_ij > threshold.

    Independent of the diffusion spectrum; for a kernel whose entries are
    near 0 or 1 this recovers the same partition as cluster().
    """
    k = np.asarray(kernel.entries, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValidationError(f"kernel entries must be square, got {k.shape}")
    adjacency = csr_matrix(k > edge_threshold)
    _, raw = connected_components(adjacency, directed=False)
    labels, found = _canonical_labels(raw)
    return ClusterAssignment(
        labels=labels, n_clusters=found,
        method=METHOD_COMPONENTS, dominant_count=None,
    )
