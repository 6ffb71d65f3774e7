"""Z2 invariants (V0, V_pi) of particle-hole symmetric two-band drives.

Three independent routes are implemented and cross-checked:

1. the high-symmetry overlap product V0*V_pi = 2|<phi_-(pi,t)|phi_-(0,t)>|^2 - 1
   together with V_pi = (-1)^{C_h} from the half-zone Chern number;
2. parities of eigenphase crossings of U(0,t) and U(pi,t) through +1 and -1;
3. the sign of the product of Pfaffians of -i H^eff T at k = 0, pi on the
   symmetric logarithm branch.

At the high-symmetry momenta the Bloch Hamiltonian has only a sigma_y
component, so U(k*, t) is a real rotation matrix and its eigenphase pair
+-Phi(t) is tracked by a single unwrapped angle.
"""

from __future__ import annotations

import numpy as np

from ..errors import (
    MethodMismatch,
    NotConverged,
    NotQuantized,
    NotSkewSymmetric,
    SingularPlaquette,
    ValidationError,
)

TAU = 2.0 * np.pi

OVERLAP_T_AGREEMENT = 1e-6
OVERLAP_QUANTIZED = 0.99
HALF_CHERN_TOL = 1e-2
REALNESS_TOL = 1e-8
CROSSING_SLOPE_TOL = 1e-6


def dclass_overlap_product(sol) -> int:
    """Sign of 2|<phi_-(pi,t)|phi_-(0,t)>|^2 - 1, equal to V0*V_pi.

    +1 when the high-symmetry Bloch vectors are parallel, -1 when
    antiparallel; any other value means the protecting symmetry is absent or
    a gap is closing.
    """
    states = sol.states_minus
    if states.ndim != 3:
        raise ValidationError("need a 1D-momentum solution with states (nt, nk, 2)")
    nk = states.shape[1]
    if nk % 2 != 0:
        raise ValidationError("nk must be even so the grid contains k = pi")
    phi0 = states[:, 0]
    phipi = states[:, nk // 2]
    p = 2.0 * np.abs(np.einsum("ti,ti->t", phipi.conj(), phi0)) ** 2 - 1.0
    if float(p.max() - p.min()) > OVERLAP_T_AGREEMENT:
        raise NotQuantized(
            f"overlap product varies by {float(p.max()-p.min()):.2e} across t"
        )
    mean = float(p.mean())
    if abs(mean) < OVERLAP_QUANTIZED:
        raise NotQuantized(f"overlap product {mean:.4f} is not pinned to +-1")
    return 1 if mean > 0 else -1


def half_bz_chern(sol, half: str = "lower") -> int:
    """Chern number of the occupied band over the (k, t) half-cylinder.

    The lower half covers k in [0, pi], the upper half k in [pi, 2pi]; time
    runs over the full period. The boundary columns k = 0, pi carry
    t-independent states, so the Berry flux through the half-cylinder is
    quantized. Plaquette link variables keep the sum gauge independent.
    """
    states = sol.states_minus
    if states.ndim != 3:
        raise ValidationError("need a 1D-momentum solution with states (nt, nk, 2)")
    nt, nk = states.shape[:2]
    if nk % 2 != 0:
        raise ValidationError("nk must be even so the grid contains k = pi")
    if half not in ("lower", "upper"):
        raise ValidationError(f"half must be 'lower' or 'upper', got {half!r}")

    link_t = np.einsum("tki,tki->tk", states.conj(), np.roll(states, -1, axis=0))
    link_k = np.einsum("tki,tki->tk", states.conj(), np.roll(states, -1, axis=1))
    if half == "lower":
        cols = np.arange(0, nk // 2)
    else:
        cols = np.arange(nk // 2, nk)
    w = (
        link_t[:, cols]
        * np.roll(link_k, -1, axis=0)[:, cols]
        * np.roll(link_t, -1, axis=1)[:, cols].conj()
        * link_k[:, cols].conj()
    )
    if np.abs(w).min() < 1e-12:
        raise SingularPlaquette("half-zone plaquette with vanishing link product")
    raw = float(np.angle(w).sum() / TAU)
    c_h = int(np.rint(raw))
    if abs(raw - c_h) > HALF_CHERN_TOL:
        raise NotConverged(
            f"half-zone Chern {raw:.4f} is {abs(raw-c_h):.2e} from integer"
        )
    return c_h


def _rotation_angle_path(u_path: np.ndarray) -> np.ndarray:
    """Unwrapped rotation angle Phi(t) of a real SO(2) propagator path."""
    u = np.asarray(u_path)
    if u.ndim != 3 or u.shape[-2:] != (2, 2):
        raise ValidationError(f"need a (nt+1, 2, 2) path, got {u.shape}")
    if float(np.abs(u.imag).max()) > REALNESS_TOL:
        raise ValidationError(
            "propagator at a high-symmetry momentum is not real; "
            "model lacks the particle-hole structure"
        )
    return np.unwrap(np.arctan2(u[:, 1, 0].real, u[:, 0, 0].real))


def _level_crossings(phi: np.ndarray, levels: np.ndarray) -> int:
    """Transversal crossings of phi(t) through any of the given levels."""
    count = 0
    for level in levels:
        d = phi - level
        s = np.sign(d)
        inside = s != 0
        sk = s[inside]
        count += int(np.sum(sk[:-1] * sk[1:] < 0))
    return count


def crossing_route(u0_path: np.ndarray, upi_path: np.ndarray):
    """(V0, V_pi) from eigenphase crossings of U(0,t) and U(pi,t).

    The eigenvalues e^{+-i Phi(t)} pass through -1 when Phi hits an odd
    multiple of pi; V_pi is the parity of that count. V0 is the product of
    the endpoint signs sign(Phi(T)) with the parity of crossings through
    nonzero multiples of 2pi. Passages through Phi = 0 itself are already
    encoded in the endpoint sign (each one flips sign(Phi(T)) relative to the
    departure direction), so they must not be counted again.
    """
    n_minus = 0
    n_plus = 0
    end_sign = 1
    for path in (u0_path, upi_path):
        phi = _rotation_angle_path(path)
        if abs(phi[0]) > 1e-12:
            raise ValidationError("propagator path must start at the identity")
        span = float(np.abs(phi).max())
        n_top = int(np.ceil((span + np.pi) / TAU))
        odd_pi = np.arange(-2 * n_top + 1, 2 * n_top, 2) * np.pi
        full_turns = np.concatenate(
            [np.arange(-n_top, 0), np.arange(1, n_top + 1)]
        ) * TAU
        n_minus += _level_crossings(phi, odd_pi)
        n_plus += _level_crossings(phi, full_turns)
        phi_T = float(phi[-1])
        wrapped = abs(phi_T) % TAU
        if min(wrapped, TAU - wrapped) < 1e-9:
            raise NotQuantized("endpoint rotation angle at the 0-gap; gap closed")
        if abs(wrapped - np.pi) < 1e-9:
            raise NotQuantized("endpoint rotation angle at the pi-gap; gap closed")
        end_sign *= 1 if phi_T > 0 else -1
    v_pi = 1 if n_minus % 2 == 0 else -1
    v0 = end_sign * (1 if n_plus % 2 == 0 else -1)
    return v0, v_pi


def dclass_invariants(sol, u0_path: np.ndarray, upi_path: np.ndarray):
    """(V0, V_pi) with the crossing route cross-checked against the
    overlap/half-zone-Chern route; disagreement raises MethodMismatch."""
    product = dclass_overlap_product(sol)
    c_h = half_bz_chern(sol)
    v_pi = 1 if c_h % 2 == 0 else -1
    v0 = product * v_pi
    v0_x, v_pi_x = crossing_route(u0_path, upi_path)
    if (v0, v_pi) != (v0_x, v_pi_x):
        raise MethodMismatch(
            f"overlap/C_h route gives (V0, V_pi) = ({v0}, {v_pi}) but the "
            f"crossing route gives ({v0_x}, {v_pi_x})"
        )
    return v0, v_pi


def pfaffian_sign_check(h0: np.ndarray, hpi: np.ndarray, period: float) -> int:
    """Sign of Pf[-i h(0) T] * Pf[-i h(pi) T] on the symmetric branch.

    For a 2x2 skew-symmetric X the Pfaffian is X[0, 1]. Equals the
    dclass_overlap_product for every gapped sample.
    """
    signs = []
    for h in (h0, hpi):
        h = np.asarray(h)
        if h.shape != (2, 2):
            raise ValidationError(f"need a 2x2 effective Hamiltonian, got {h.shape}")
        x = -1j * h * period
        if float(np.abs(x + x.T).max()) > 1e-8:
            raise NotSkewSymmetric(
                "-i h T is not skew-symmetric at a high-symmetry momentum"
            )
        pf = x[0, 1]
        if abs(pf.imag) > 1e-8 or abs(pf.real) < 1e-12:
            raise NotSkewSymmetric("Pfaffian is not a nonzero real number")
        signs.append(1 if pf.real > 0 else -1)
    return signs[0] * signs[1]
