"""Winding-type invariants: equatorial Bloch windings, gap windings of
periodized half-period operators, the 3D winding number of a periodized
evolution, fixed-time Chern numbers, and the Pontryagin residue relation.

Phase unwrapping picks the representative step in (-pi, pi]; grids are
assumed uniform and periodic, so every loop sum closes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import pauli
from ..errors import (
    ChiralStructureViolated,
    NonEquatorialState,
    NotConverged,
    NotQuantized,
    SingularPlaquette,
    ValidationError,
)

TAU = 2.0 * np.pi


def _wrap_steps(d: np.ndarray) -> np.ndarray:
    """Map angle increments into (-pi, pi]."""
    return np.pi - np.mod(np.pi - d, TAU)


def _loop_winding(angles: np.ndarray) -> float:
    """Total winding of a closed angle sequence, in turns (not rounded)."""
    d = np.diff(angles, append=angles[:1])
    return float(_wrap_steps(d).sum() / TAU)


def _round_int(raw: float, tol: float, what: str) -> int:
    w = int(np.rint(raw))
    if abs(raw - w) > tol:
        raise NotQuantized(f"{what} = {raw:.6f} is {abs(raw - w):.2e} from integer")
    return w


def winding_equatorial(states: np.ndarray, nz_tol: float = 0.1) -> int:
    """Winding number of the occupied Bloch vector around the equator.

    states: (nk, 2) spinors on a closed uniform k loop over [0, 2pi). The
    chiral symmetry of class AIII pins n(k) to the equator at t = 0 and
    t = T/2; elsewhere the winding is undefined and NonEquatorialState is
    raised.
    """
    states = np.asarray(states)
    if states.ndim != 2 or states.shape[-1] != 2:
        raise ValidationError(f"expected (nk, 2) spinor array, got {states.shape}")
    n = pauli.bloch_vector(states)
    nz = np.abs(n[:, 2]).max()
    if nz > nz_tol:
        raise NonEquatorialState(
            f"|n_z| reaches {nz:.3f} (> {nz_tol}); no protected equatorial winding"
        )
    raw = _loop_winding(np.arctan2(n[:, 1], n[:, 0]))
    return _round_int(raw, 1e-3, "equatorial winding")


def _phase_winding(z: np.ndarray) -> float:
    return _loop_winding(np.angle(z))


def aiii_gap_windings(
    u0_half: np.ndarray,
    upi_half: np.ndarray,
    structure_tol: float = 1e-6,
) -> tuple[int, int]:
    """Gap invariants (W0, Wpi) from periodized operators at t = T/2.

    In the chiral (sigma_z) basis the zero-gap operator U_0(k, T/2) must be
    strictly off-diagonal and the pi-gap operator strictly diagonal; each
    then reduces to a single unit-modulus function of k whose phase winding
    (times -1, matching W = (i/2pi) Int (u+)^{-1} d_k u+ dk) is the invariant.
    The relevant entries are u_0+ = [0, 1] and u_pi+ = [1, 1]; this pairing
    realizes W0 = (nu_0 + nu_T/2)/2 and Wpi = (nu_0 - nu_T/2)/2 against the
    equatorial windings, with the conventional phase labels (1,0)/(1,1)/(0,1).
    """
    u0 = np.asarray(u0_half)
    upi = np.asarray(upi_half)
    if u0.shape != upi.shape or u0.shape[-2:] != (2, 2) or u0.ndim != 3:
        raise ValidationError("expected matching (nk, 2, 2) operator arrays")
    diag_resid = max(np.abs(u0[:, 0, 0]).max(), np.abs(u0[:, 1, 1]).max())
    if diag_resid > structure_tol:
        raise ChiralStructureViolated(
            f"U_0(k, T/2) has diagonal weight {diag_resid:.2e} (> {structure_tol:.0e})"
        )
    off_resid = max(np.abs(upi[:, 0, 1]).max(), np.abs(upi[:, 1, 0]).max())
    if off_resid > structure_tol:
        raise ChiralStructureViolated(
            f"U_pi(k, T/2) has off-diagonal weight {off_resid:.2e} (> {structure_tol:.0e})"
        )
    w0 = _round_int(-_phase_winding(u0[:, 0, 1]), 1e-3, "W0")
    wpi = _round_int(-_phase_winding(upi[:, 1, 1]), 1e-3, "Wpi")
    return w0, wpi


def winding3_raw(u_eps: np.ndarray) -> float:
    """Unrounded 3D winding integral of a periodized evolution.

    u_eps: (nt+1, nk, nk, 2, 2) with identity endpoints. Discretizes
    (1/8pi^2) Int Tr(U^-1 d_t U [U^-1 d_kx U, U^-1 d_ky U]) dt dkx dky
    with central differences; the grid spacings cancel against the
    difference denominators, so no lengths are needed.
    """
    u = np.asarray(u_eps)
    if u.ndim != 5 or u.shape[-2:] != (2, 2):
        raise ValidationError(f"expected (nt+1, nkx, nky, 2, 2), got {u.shape}")
    if np.abs(u[0] - np.eye(2)).max() > 1e-8 or np.abs(u[-1] - np.eye(2)).max() > 1e-8:
        raise ValidationError("periodized operator must be the identity at t = 0, T")
    u = u[:-1]  # periodic torus samples

    uinv = np.conj(np.swapaxes(u, -1, -2))

    def one_form(axis: int) -> np.ndarray:
        # U^-1 dU along axis, central difference with periodic wrap;
        # the 1/(2h) and the Riemann weight h cancel, leaving 1/2
        d = (np.roll(u, -1, axis=axis) - np.roll(u, 1, axis=axis)) / 2.0
        return uinv @ d

    at, ax, ay = one_form(0), one_form(1), one_form(2)
    comm = ax @ ay - ay @ ax
    integrand = np.trace(at @ comm, axis1=-2, axis2=-1)
    return float(np.real(integrand).sum() / (8.0 * np.pi**2))


def winding3(u_eps: np.ndarray, int_tol: float = 0.2) -> int:
    """3D winding number of a periodized evolution on the (t, kx, ky) torus.

    See winding3_raw for the discretization; this rounds and rejects
    values farther than int_tol from an integer.
    """
    raw = winding3_raw(u_eps)
    w = int(np.rint(raw))
    if abs(raw - w) > int_tol:
        raise NotConverged(
            f"3D winding {raw:.4f} is {abs(raw - w):.3f} from integer; refine grid"
        )
    return w


def chern_fixed_t(n_field: np.ndarray, singular_tol: float = 1e-12) -> int:
    """Chern number of a unit Bloch-vector field over the (kx, ky) torus.

    Plaquette link-variable method: the Berry flux through each cell is the
    phase of Tr(P1 P2 P3 P4) around its corners (P = (1 + n.sigma)/2), which
    makes the total exactly quantized on any grid that resolves the field.
    """
    n = np.asarray(n_field, dtype=float)
    if n.ndim != 3 or n.shape[-1] != 3:
        raise ValidationError(f"expected (nkx, nky, 3) field, got {n.shape}")
    coeffs = np.concatenate([np.ones(n.shape[:-1] + (1,)), n], axis=-1) / 2.0
    p = pauli.pauli_compose(coeffs)
    p1 = p
    p2 = np.roll(p, -1, axis=0)
    p3 = np.roll(p2, -1, axis=1)
    p4 = np.roll(p, -1, axis=1)
    tr = np.trace(p1 @ p2 @ p3 @ p4, axis1=-2, axis2=-1)
    small = np.abs(tr).min()
    if small < singular_tol:
        idx = np.unravel_index(np.abs(tr).argmin(), tr.shape)
        raise SingularPlaquette(
            f"plaquette at {idx} has |overlap product| = {small:.2e}; refine grid"
        )
    total = float(np.angle(tr).sum() / TAU)
    return _round_int(total, 1e-3, "Chern number")


@dataclass(frozen=True)
class PontryaginResidue:
    """nu = w_pi modulo 2(w_pi - w0), canonical representative."""

    value: int
    modulus: int


def pontryagin_from_gaps(w0: int, w_pi: int) -> PontryaginResidue:
    """Reduce the pi-gap winding into the residue class nu mod 2(w_pi - w0).

    The canonical representative lies in (-|m|/2, |m|/2]; a vanishing
    modulus (w0 = w_pi) leaves the plain integer w_pi.
    """
    m = 2 * (w_pi - w0)
    if m == 0:
        return PontryaginResidue(value=int(w_pi), modulus=0)
    am = abs(m)
    value = int(w_pi) % am  # in [0, am)
    if value > am // 2:
        value -= am
    return PontryaginResidue(value=value, modulus=am)
