"""Two-segment quench drives with prescribed initial/final Chern numbers.

The drive runs (1+delta)*H_f for a time T/(1+delta) and then -H_i for the
remainder, with T = pi and both Hamiltonians normalized pointwise to
eigenvalues +-1. The first segment alone would give U(T) = -1; the short
second segment splits the pi-quasienergy degeneracy by ~ delta*pi/(1+delta)
and pins the occupied Floquet-Bloch state at t = 0 to the ground state of
H_i. The resulting field carries (W0, W_pi) = (c_f, c_f - c_i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UnsupportedChern, ValidationError
from ..models import PiecewiseDrive, _coeff_stack

QUENCH_PERIOD = np.pi


@dataclass(frozen=True)
class QuenchDrive(PiecewiseDrive):
    """Quench drive tagged with its designed Chern numbers."""

    c_i: int = 0
    c_f: int = 0
    delta: float = 0.01

    def params(self) -> dict:
        return {
            "c_i": self.c_i,
            "c_f": self.c_f,
            "delta": self.delta,
            "period": self.period,
        }


def _unit_dirac(m: float, k1, k2) -> tuple:
    """Unit Bloch vector of the regularized Dirac model with mass term m."""
    nx = np.sin(k1)
    ny = np.sin(k2)
    nz = m - np.cos(k1) - np.cos(k2)
    r = np.sqrt(nx * nx + ny * ny + nz * nz)
    return nx / r, ny / r, nz / r


def _azimuthal_double(nx, ny, nz):
    """Double the azimuthal angle of a unit Bloch field (degree doubles).

    On the z-axis (s = 0) the doubled field keeps the pole value.
    """
    s = np.hypot(nx, ny)
    safe = np.where(s < 1e-12, 1.0, s)
    dx = np.where(s < 1e-12, 0.0, (nx * nx - ny * ny) / safe)
    dy = np.where(s < 1e-12, 0.0, 2.0 * nx * ny / safe)
    return dx, dy, nz


def reference_bloch_field(c: int, k1, k2) -> tuple:
    """Unit Bloch field whose lower band carries Chern number c (|c| <= 2)."""
    if c == 0:
        return _unit_dirac(3.0, k1, k2)
    if abs(c) == 1:
        return _unit_dirac(float(c), k1, k2)
    if abs(c) == 2:
        return _azimuthal_double(*_unit_dirac(float(np.sign(c)), k1, k2))
    raise UnsupportedChern(f"no reference construction for Chern number {c}")


def quench_construction(c_i: int, c_f: int, delta: float = 0.01) -> QuenchDrive:
    """Drive whose Floquet band interpolates Chern numbers c_i -> c_f."""
    for name, c in (("c_i", c_i), ("c_f", c_f)):
        if int(c) != c:
            raise UnsupportedChern(f"{name} must be an integer, got {c!r}")
        if abs(int(c)) > 2:
            raise UnsupportedChern(f"|{name}| <= 2 required, got {int(c)}")
    c_i, c_f = int(c_i), int(c_f)
    if not 0.0 < delta <= 0.05:
        raise ValidationError(f"delta must lie in (0, 0.05], got {delta}")

    scale = 1.0 + delta

    def final_coeffs(k):
        k1, k2 = k
        nx, ny, nz = reference_bloch_field(c_f, np.asarray(k1), np.asarray(k2))
        return _coeff_stack(np.zeros_like(nx), scale * nx, scale * ny, scale * nz)

    def initial_coeffs(k):
        k1, k2 = k
        nx, ny, nz = reference_bloch_field(c_i, np.asarray(k1), np.asarray(k2))
        return _coeff_stack(np.zeros_like(nx), -nx, -ny, -nz)

    frac_f = 1.0 / scale
    return QuenchDrive(
        segments=((frac_f, final_coeffs), (1.0 - frac_f, initial_coeffs)),
        period=QUENCH_PERIOD,
        dims=2,
        tag="quench",
        c_i=c_i,
        c_f=c_f,
        delta=delta,
    )
