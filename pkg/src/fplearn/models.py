"""Catalog of periodically driven two-band lattice models.

Every model exposes the same small protocol:

* ``period``        driving period T
* ``dims``          momentum-space dimension (1 or 2)
* ``coefficients``  instantaneous Pauli coefficients (a0, ax, ay, az) of
                    H(k, t), vectorized over momentum arrays
* ``segment_table`` for piecewise-constant drives, the exact segment layout
                    as (start fraction, end fraction, coefficient function);
                    None for smoothly modulated drives
* ``tag``/``params`` stable identifiers for dataset manifests

Momenta are passed as a tuple of broadcastable arrays, one per dimension,
with each component living on [0, 2pi).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import OutOfRangeTime, ValidationError
from .pauli import pauli_compose


def _coeff_stack(a0, ax, ay, az) -> np.ndarray:
    parts = np.broadcast_arrays(*(np.asarray(p, dtype=float) for p in (a0, ax, ay, az)))
    return np.stack(parts, axis=-1)


def _check_period(period: float) -> None:
    if not (np.isfinite(period) and period > 0):
        raise ValidationError(f"period must be positive and finite, got {period}")


@dataclass(frozen=True)
class AiiiDrive:
    """Modulated two-band SSH chain with chiral symmetry (class AIII).

    H(k, t) = theta_re*sx + theta_im*sy + gamma(t)*(cos(k)*sx + sin(k)*sy)
    with gamma(t) = 0.6*pi/T + 2*g*cos(2*pi*t/T). The drive is smooth, so
    propagators are built from midpoint-sampled exponential substeps.
    """

    theta_re: float
    theta_im: float
    g: float
    period: float = 1.0

    dims = 1
    tag = "aiii"

    def __post_init__(self):
        _check_period(self.period)

    def gamma(self, t):
        t = np.asarray(t, dtype=float)
        base = 0.6 * np.pi / self.period
        return base + 2.0 * self.g * np.cos(2.0 * np.pi * t / self.period)

    def coefficients(self, k: Sequence[np.ndarray], t) -> np.ndarray:
        (kx,) = k
        gam = self.gamma(t)
        ax = self.theta_re + gam * np.cos(kx)
        ay = self.theta_im + gam * np.sin(kx)
        return _coeff_stack(0.0, ax, ay, np.zeros_like(ax))

    def segment_table(self):
        return None

    def params(self) -> dict:
        return {
            "theta_re": self.theta_re,
            "theta_im": self.theta_im,
            "g": self.g,
            "period": self.period,
        }


@dataclass(frozen=True)
class TwoDADrive:
    """Five-step two-dimensional hopping drive (class A).

    Each fifth of the period applies one constant Hamiltonian: a local
    J*sx coupling, then three directional hoppings J*(e^{i phi(k)} s+ + h.c.)
    with phi = k1, k1+k2, k2, then a pure sublattice offset. A static
    delta*sz offset acts throughout.

    The two sublattices sit on a checkerboard, so the Bravais lattice is
    spanned by the diagonal vectors (1,1) and (1,-1) of the underlying
    square lattice. Momenta (k1, k2) are reciprocal-primitive coordinates
    of that lattice (k1 = kx-ky, k2 = kx+ky in square-lattice Cartesian
    components), each 2pi-periodic, so the sampling square [0, 2pi)^2 is
    exactly one Brillouin zone.
    """

    j: float
    delta: float
    period: float = 1.0

    dims = 2
    tag = "twod_a"

    def __post_init__(self):
        _check_period(self.period)

    def _segment_coeffs(self, n: int, k) -> np.ndarray:
        k1, k2 = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in k))
        zero = np.zeros_like(k1)
        delta = np.full_like(k1, self.delta)
        if n == 0:
            return _coeff_stack(zero, np.full_like(k1, self.j), zero, delta)
        if n == 4:
            return _coeff_stack(zero, zero, zero, delta)
        phi = {1: k1, 2: k1 + k2, 3: k2}[n]
        # J(e^{i phi} s+ + e^{-i phi} s-) = J cos(phi) sx - J sin(phi) sy
        return _coeff_stack(zero, self.j * np.cos(phi), -self.j * np.sin(phi), delta)

    def coefficients(self, k, t) -> np.ndarray:
        frac = np.asarray(t, dtype=float) / self.period
        if frac.ndim != 0:
            raise ValidationError("piecewise drives take scalar t")
        n = min(int(frac * 5.0), 4)
        return self._segment_coeffs(n, k)

    def segment_table(self):
        return tuple(
            (n / 5.0, (n + 1) / 5.0, lambda k, n=n: self._segment_coeffs(n, k))
            for n in range(5)
        )

    def params(self) -> dict:
        return {"j": self.j, "delta": self.delta, "period": self.period}


@dataclass(frozen=True)
class DClassDrive:
    """Two-segment driven superconducting-like chain (class D).

    First half period: H = -J1*(sin(k)*sx - cos(k)*sy) + g*sin(k)*sz.
    Second half period: H = J2*sy + g*sin(k)*sz.
    """

    j1: float
    j2: float
    g: float
    period: float = 1.0

    dims = 1
    tag = "dclass"

    def __post_init__(self):
        _check_period(self.period)

    def _segment_coeffs(self, n: int, k) -> np.ndarray:
        (kx,) = k
        kx = np.asarray(kx, dtype=float)
        zero = np.zeros_like(kx)
        az = self.g * np.sin(kx)
        if n == 0:
            return _coeff_stack(zero, -self.j1 * np.sin(kx), self.j1 * np.cos(kx), az)
        return _coeff_stack(zero, zero, np.full_like(kx, self.j2), az)

    def coefficients(self, k, t) -> np.ndarray:
        frac = np.asarray(t, dtype=float) / self.period
        if frac.ndim != 0:
            raise ValidationError("piecewise drives take scalar t")
        return self._segment_coeffs(0 if frac < 0.5 else 1, k)

    def segment_table(self):
        return (
            (0.0, 0.5, lambda k: self._segment_coeffs(0, k)),
            (0.5, 1.0, lambda k: self._segment_coeffs(1, k)),
        )

    def params(self) -> dict:
        return {"j1": self.j1, "j2": self.j2, "g": self.g, "period": self.period}


@dataclass(frozen=True)
class PiecewiseDrive:
    """Generic piecewise-constant drive from explicit segments.

    segments: sequence of (duration fraction, coefficient function), where
    each function maps a momentum tuple to (..., 4) Pauli coefficients.
    """

    segments: tuple
    period: float
    dims: int = 1
    tag: str = "piecewise"

    def __post_init__(self):
        _check_period(self.period)
        if self.dims not in (1, 2):
            raise ValidationError("dims must be 1 or 2")
        fracs = np.array([s[0] for s in self.segments], dtype=float)
        if len(fracs) == 0 or np.any(fracs <= 0):
            raise ValidationError("segments need positive duration fractions")
        if abs(fracs.sum() - 1.0) > 1e-12:
            raise ValidationError(
                f"segment fractions must sum to 1, got {fracs.sum()!r}"
            )

    def segment_table(self):
        table = []
        start = 0.0
        for frac, fn in self.segments:
            table.append((start, start + frac, fn))
            start += frac
        # guard against accumulated rounding at the final boundary
        last = table[-1]
        table[-1] = (last[0], 1.0, last[2])
        return tuple(table)

    def coefficients(self, k, t) -> np.ndarray:
        frac = np.asarray(t, dtype=float) / self.period
        if frac.ndim != 0:
            raise ValidationError("piecewise drives take scalar t")
        for start, end, fn in self.segment_table():
            if start <= frac < end:
                return np.asarray(fn(k), dtype=float)
        raise OutOfRangeTime(f"t/T = {float(frac)} outside [0, 1)")

    def params(self) -> dict:
        return {"period": self.period, "n_segments": len(self.segments)}


def _as_momentum_tuple(model, k):
    if model.dims == 1:
        if isinstance(k, (tuple, list)) and len(k) == 1:
            k = k[0]
        return (np.asarray(k, dtype=float),)
    if not isinstance(k, (tuple, list)) or len(k) != 2:
        raise ValidationError("2D models take momentum as a (kx, ky) pair")
    return tuple(np.asarray(c, dtype=float) for c in k)


def hamiltonian_at(model, k, t) -> np.ndarray:
    """Instantaneous Bloch Hamiltonian H(k, t) as a 2x2 matrix.

    t must lie in [0, T); momenta follow the model's dimensionality.
    """
    t = float(t)
    if not (0.0 <= t < model.period):
        raise OutOfRangeTime(f"t = {t} outside [0, {model.period})")
    return pauli_compose(model.coefficients(_as_momentum_tuple(model, k), t))


MODEL_TAGS: dict[str, type] = {
    "aiii": AiiiDrive,
    "twod_a": TwoDADrive,
    "dclass": DClassDrive,
}
