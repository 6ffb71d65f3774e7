"""Unsupervised discovery and analytic verification of Floquet topological phases.

The package has three layers:

* a Floquet engine (``models``, ``engine``) producing flattened Floquet
  operators on momentum-time grids for a small catalog of two-band drives,
* an unsupervised learner (``learn``) that clusters those operator fields
  with a determinant kernel and diffusion map,
* analytic topological invariants (``invariants``) used to verify the
  clusters independently.

``fplearn.cli`` wires the layers into a command-line pipeline.
"""

from __future__ import annotations

__all__ = ["DiffusionMapClustering"]
__version__ = "0.1.0"


def __getattr__(name):
    if name == "DiffusionMapClustering":
        from .learn import DiffusionMapClustering

        return DiffusionMapClustering
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
