"""Diffusion map over a kernel matrix: spectrum of the Markov transition
matrix P = D^{-1} K and the induced diffusion distances.

P is similar to the symmetric S = D^{-1/2} K D^{-1/2}, so the spectrum is
computed from S (real, stable) and the right eigenvectors of P recovered as
v = D^{-1/2} u.  Eigenvalues come back sorted descending; lambda_0 = 1 always,
with a constant right eigenvector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError, ZeroRow
from .kernel import KernelMatrix

# lambda_0 = 1 and lambda_min >= 0 are enforced to this tolerance; smaller
# violations are clamped, larger ones indicate a malformed kernel.
SPECTRUM_TOL = 1e-9


@dataclass(frozen=True)
class DiffusionSpectrum:
    """Eigendecomposition of the transition matrix built from one kernel.

    vectors[:, n] is the right eigenvector of P for eigenvalues[n], normalized
    in the stationary-measure inner product sum_i pi_i v_i w_i with
    pi_i = d_i / sum(d).  Under that normalization the lambda_0 eigenvector
    is the constant vector of ones.
    """

    eigenvalues: np.ndarray  # (n,), descending, in [0, 1]
    vectors: np.ndarray      # (n, n), right eigenvectors of P as columns
    row_sums: np.ndarray     # (n,), d_i = sum_j K_ij


def diffusion_spectrum(kernel: KernelMatrix) -> DiffusionSpectrum:
    """Spectrum and right eigenvectors of P = D^{-1} K."""
    k = np.asarray(kernel.entries, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] != kernel.n:
        raise ValidationError(f"kernel entries must be ({kernel.n}, {kernel.n}), got {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValidationError("kernel entries contain non-finite values")
    d = k.sum(axis=1)
    if np.any(d <= 0.0):
        i = int(np.argmin(d))
        raise ZeroRow(f"kernel row {i} sums to {d[i]}; sample is isolated")

    inv_sqrt = 1.0 / np.sqrt(d)
    sym = k * inv_sqrt[:, None] * inv_sqrt[None, :]
    sym = 0.5 * (sym + sym.T)  # scrub rounding asymmetry before eigh
    w, u = np.linalg.eigh(sym)
    order = np.argsort(w)[::-1]
    w = w[order]
    u = u[:, order]

    if abs(w[0] - 1.0) > SPECTRUM_TOL:
        raise ValidationError(f"leading transition eigenvalue {w[0]} is not 1")
    if w[-1] < -SPECTRUM_TOL:
        raise ValidationError(f"transition spectrum has negative eigenvalue {w[-1]}")
    w = np.clip(w, 0.0, 1.0)

    # v = sqrt(sum d) * D^{-1/2} u  has unit stationary-measure norm, and
    # makes the lambda_0 eigenvector the constant +1 vector (up to sign).
    vectors = np.sqrt(d.sum()) * inv_sqrt[:, None] * u
    signs = np.where(vectors[np.argmax(np.abs(vectors), axis=0), np.arange(len(w))] < 0, -1.0, 1.0)
    vectors = vectors * signs[None, :]
    return DiffusionSpectrum(eigenvalues=w, vectors=vectors, row_sums=d)


def diffusion_distance(spectrum: DiffusionSpectrum, i: int, j: int, ell: int) -> float:
    """Distance between samples i and j after ell diffusion steps.

    d_ell(i, j)^2 = sum_n lambda_n^{2 ell} [(v_n)_i - (v_n)_j]^2.  The n = 0
    term never contributes because that eigenvector is constant.
    """
    if not isinstance(ell, (int, np.integer)) or ell < 1:
        raise ValidationError(f"ell must be an integer >= 1, got {ell!r}")
    n = len(spectrum.eigenvalues)
    if not (0 <= i < n and 0 <= j < n):
        raise ValidationError(f"sample indices ({i}, {j}) out of range for n = {n}")
    diff = spectrum.vectors[i] - spectrum.vectors[j]
    weights = spectrum.eigenvalues ** (2 * ell)
    return float(np.sqrt(np.sum(weights * diff * diff)))
