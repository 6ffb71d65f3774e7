"""Per-sample invariant evaluation drivers.

One driver per model family: each runs the evolution engine at a
family-appropriate grid, evaluates every invariant the family admits,
cross-checks the redundant routes against each other, and returns a single
InvariantRecord. Integrals that have not converged escalate through a fixed
grid ladder before giving up; large rungs stream the 3D winding integral
slice by slice instead of materializing whole periodized paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import engine, pauli
from ..engine import GridSpec
from ..errors import (
    DegenerateTarget,
    LoopsTooClose,
    MethodMismatch,
    NotConverged,
    OpenCurve,
    ValidationError,
)
from .dclass import dclass_invariants, half_bz_chern, pfaffian_sign_check
from .hopf import linking_number, preimage_loops
from .windings import (
    aiii_gap_windings,
    chern_fixed_t,
    pontryagin_from_gaps,
    winding3_raw,
    winding_equatorial,
)

__all__ = [
    "InvariantRecord",
    "aiii_record",
    "twoda_record",
    "dclass_record",
    "invariant_record",
    "eq6_sign",
]


@dataclass(frozen=True)
class InvariantRecord:
    """Integer invariants of one sample; fields a family does not define stay None."""

    w0: Optional[int] = None
    w_pi: Optional[int] = None
    nu0: Optional[int] = None
    nu_half: Optional[int] = None
    chern: Optional[int] = None
    link: Optional[int] = None
    nu_value: Optional[int] = None
    nu_modulus: Optional[int] = None
    v0: Optional[int] = None
    v_pi: Optional[int] = None
    c_h: Optional[int] = None

    _FIELDS = (
        "w0",
        "w_pi",
        "nu0",
        "nu_half",
        "chern",
        "link",
        "nu_value",
        "nu_modulus",
        "v0",
        "v_pi",
        "c_h",
    )

    def as_dict(self) -> dict:
        """Populated fields only, in declaration order; absent means undefined."""
        out = {}
        for name in self._FIELDS:
            value = getattr(self, name)
            if value is not None:
                out[name] = int(value)
        return out

    def integer_signature(self) -> tuple:
        """Hashable (name, value) tuple for cluster-consistency comparison."""
        return tuple(sorted(self.as_dict().items()))


# ---------------------------------------------------------------------------
# class AIII (1D, two gaps)

AIII_NK = 64
AIII_NT = 32


def aiii_record(model, nk: int = AIII_NK, nt: int = AIII_NT) -> InvariantRecord:
    """Equatorial windings at t = 0, T/2 plus both gap windings, cross-checked.

    The t = T/2 sample must fall on the stored grid, so nt has to be even.
    """
    if nt % 2:
        raise ValidationError("nt must be even so that t = T/2 is a stored slice")
    grid = GridSpec(nk=nk, nt=nt, dims=1)
    sol = engine.floquet_solve(model, grid)

    nu0 = winding_equatorial(sol.states_minus[0])
    nu_half = winding_equatorial(sol.states_minus[nt // 2])

    period = model.period
    u_t = sol.u_path[-1]
    half = nt // 2
    u0_half = engine.periodized_evolution(
        sol.u_path, engine.effective_hamiltonian(u_t, period, engine.BRANCH_ZERO)
    )[half]
    upi_half = engine.periodized_evolution(
        sol.u_path, engine.effective_hamiltonian(u_t, period, engine.BRANCH_PI)
    )[half]
    w0, w_pi = aiii_gap_windings(u0_half, upi_half)

    if 2 * w0 != nu0 + nu_half:
        raise MethodMismatch(
            f"gap winding W0 = {w0} does not equal (nu0 + nu_half)/2 "
            f"= ({nu0} + {nu_half})/2"
        )
    if 2 * abs(w_pi) != abs(nu0 - nu_half):
        raise MethodMismatch(
            f"gap winding W_pi = {w_pi} is not +-(nu_half - nu0)/2 "
            f"for (nu0, nu_half) = ({nu0}, {nu_half})"
        )
    return InvariantRecord(w0=w0, w_pi=w_pi, nu0=nu0, nu_half=nu_half)


def eq6_sign(record: InvariantRecord) -> int:
    """Sign s with W_pi = s (nu_half - nu0)/2 for one record.

    Returns 0 when both signs fit (W_pi = 0); a dataset must realize a single
    nonzero sign across all its samples.
    """
    diff = record.nu_half - record.nu0
    if 2 * record.w_pi == diff and 2 * record.w_pi == -diff:
        return 0
    if 2 * record.w_pi == diff:
        return 1
    if 2 * record.w_pi == -diff:
        return -1
    raise MethodMismatch(
        f"W_pi = {record.w_pi} matches neither sign of "
        f"(nu_half - nu0)/2 = {diff}/2"
    )


# ---------------------------------------------------------------------------
# 2D two-band families (charge-pumped and quenched drives)

TWODA_CHERN_NK = 48
TWODA_CHERN_NT = 8
# (nk, nt) rungs for the 3D winding integral; error falls roughly as 1/nk,
# so each rung halves the residual of a near-critical sample
WINDING3_LADDER = ((48, 192), (96, 192), (192, 192))
WINDING3_TIGHT = 0.05  # default-grid guarantee for gapped samples
WINDING3_FINAL = 0.2  # rounding limit of the integral itself
STREAM_MIN_NK = 96  # above this, whole-path arrays outgrow memory

HOPF_LADDER = ((48, 48), (64, 64), (96, 96))
_SQ2 = 1.0 / np.sqrt(2.0)
HOPF_TARGET_A = (0.0, 0.0, -1.0)
HOPF_TARGET_B = (-_SQ2, 0.0, -_SQ2)


def _winding3_raw_arrays(model, grid: GridSpec, cut: float) -> float:
    u_path = engine.evolve_grid(model, grid)
    h_eff = engine.effective_hamiltonian(u_path[-1], model.period, cut)
    return winding3_raw(engine.periodized_evolution(u_path, h_eff))


def _slice_integrand(prev: np.ndarray, cur: np.ndarray, nxt: np.ndarray) -> float:
    """One fixed-t layer of the winding3 sum (same differences as winding3_raw)."""
    uinv = np.conj(np.swapaxes(cur, -1, -2))
    at = uinv @ ((nxt - prev) / 2.0)
    ax = uinv @ ((np.roll(cur, -1, axis=0) - np.roll(cur, 1, axis=0)) / 2.0)
    ay = uinv @ ((np.roll(cur, -1, axis=1) - np.roll(cur, 1, axis=1)) / 2.0)
    comm = ax @ ay - ay @ ax
    return float(np.real(np.trace(at @ comm, axis1=-2, axis2=-1)).sum())


def _winding3_raw_streamed(model, grid: GridSpec, cut: float) -> float:
    """winding3_raw without materializing the (nt, nk, nk) path.

    Pass 1 accumulates U(k, T); pass 2 regenerates the step factors and
    slides a three-slice window of the periodized operator through time,
    adding one fixed-t layer of the integrand per step. The first two and
    last slices are kept for the periodic wrap of the t difference.
    """
    period = model.period
    nt = grid.nt
    kshape = grid.k_shape()
    eye = np.zeros(kshape + (2, 2), dtype=complex)
    eye[..., 0, 0] = 1.0
    eye[..., 1, 1] = 1.0

    u_t = eye.copy()
    for f in engine.step_factors(model, grid):
        u_t = f @ u_t
    h_eff = engine.effective_hamiltonian(u_t, period, cut)
    h_coeffs = pauli.pauli_decompose(h_eff.h)
    e_step = pauli.expm_pauli(h_coeffs, -period / nt)

    u_cur = eye.copy()
    e_cur = eye.copy()
    s_first = eye  # periodized slice at t = 0 is exactly the identity
    s_second = None
    prev: Optional[np.ndarray] = None
    cur = s_first
    total = 0.0
    m = 0
    for f in engine.step_factors(model, grid):
        u_cur = f @ u_cur
        e_cur = e_cur @ e_step
        nxt = u_cur @ e_cur
        if m + 1 < nt:
            if m == 0:
                s_second = nxt
            if prev is not None:
                total += _slice_integrand(prev, cur, nxt)
            prev, cur = cur, nxt
            m += 1
            continue
        resid = float(np.abs(nxt - eye).max())
        if resid > 1e-8:
            raise NotConverged(
                f"periodized evolution endpoint deviates from identity by {resid:.3e}"
            )
        total += _slice_integrand(prev, cur, s_first)
        total += _slice_integrand(cur, s_first, s_second)
        m += 1
    return total / (8.0 * np.pi**2)


def _gap_windings_2d(model) -> tuple:
    """(W0, W_pi) through the grid ladder; both cuts must converge together."""
    last = None
    for nk, nt in WINDING3_LADDER:
        grid = GridSpec(nk=nk, nt=nt, dims=2)
        evaluate = _winding3_raw_streamed if nk >= STREAM_MIN_NK else _winding3_raw_arrays
        raws = [evaluate(model, grid, cut) for cut in (engine.BRANCH_ZERO, engine.BRANCH_PI)]
        err = max(abs(r - np.rint(r)) for r in raws)
        last = (raws, err, (nk, nt))
        final = (nk, nt) == WINDING3_LADDER[-1]
        if err <= WINDING3_TIGHT or (final and err <= WINDING3_FINAL):
            return int(np.rint(raws[0])), int(np.rint(raws[1]))
    raws, err, rung = last
    raise NotConverged(
        f"3D windings {raws[0]:.4f}, {raws[1]:.4f} still {err:.3f} from integers "
        f"at grid {rung}"
    )


def _linking_2d(model) -> int:
    """Linking number of the two reference preimage families, escalating grids."""
    failure: Optional[Exception] = None
    for nk, nt in HOPF_LADDER:
        grid = GridSpec(nk=nk, nt=nt, dims=2)
        sol = engine.floquet_solve(model, grid)
        q = engine.ffo(sol).q
        try:
            loops_a = preimage_loops(q, HOPF_TARGET_A)
            loops_b = preimage_loops(q, HOPF_TARGET_B)
            return linking_number(loops_a, loops_b)
        except (OpenCurve, DegenerateTarget, LoopsTooClose, NotConverged) as exc:
            failure = exc
    raise failure


def twoda_record(model) -> InvariantRecord:
    """Chern, gap windings, Pontryagin residue, and (when defined) linking.

    Works for any 2D two-band drive. The fixed-t Chern number must agree
    across every stored t-slice and must equal W0 - W_pi; the linking number
    is evaluated only on Chern-0 samples, where the preimages close.
    """
    grid = GridSpec(nk=TWODA_CHERN_NK, nt=TWODA_CHERN_NT, dims=2)
    sol = engine.floquet_solve(model, grid)
    q = engine.ffo(sol).q
    cherns = {chern_fixed_t(q[m]) for m in range(grid.nt)}
    if len(cherns) != 1:
        raise MethodMismatch(
            f"fixed-t Chern number differs across t-slices: {sorted(cherns)}"
        )
    chern = cherns.pop()

    w0, w_pi = _gap_windings_2d(model)
    if chern != w0 - w_pi:
        raise MethodMismatch(
            f"fixed-t Chern {chern} != W0 - W_pi = {w0} - {w_pi}"
        )
    residue = pontryagin_from_gaps(w0, w_pi)

    link = _linking_2d(model) if chern == 0 else None
    return InvariantRecord(
        w0=w0,
        w_pi=w_pi,
        chern=chern,
        link=link,
        nu_value=residue.value,
        nu_modulus=residue.modulus,
    )


# ---------------------------------------------------------------------------
# class D (1D, particle-hole symmetric)

DCLASS_NK = 64
DCLASS_NT = 64
DCLASS_PATH_REFINE = 8  # time refinement for the eigenphase crossing count


def dclass_record(model, nk: int = DCLASS_NK, nt: int = DCLASS_NT) -> InvariantRecord:
    """(V0, V_pi, C_h) with every redundant route enforced.

    dclass_invariants already cross-checks the overlap/half-zone-Chern route
    against the crossing count; on top of that the Pfaffian signs at the
    symmetric momenta must reproduce the overlap product, and the two
    half-zone Chern numbers must cancel.
    """
    grid = GridSpec(nk=nk, nt=nt, dims=1)
    sol = engine.floquet_solve(model, grid)
    fine = GridSpec(nk=8, nt=DCLASS_PATH_REFINE * nt, dims=1)
    u0_path = engine.evolve_path(model, 0.0, fine)
    upi_path = engine.evolve_path(model, np.pi, fine)

    v0, v_pi = dclass_invariants(sol, u0_path, upi_path)
    c_lower = half_bz_chern(sol, half="lower")
    c_upper = half_bz_chern(sol, half="upper")
    if c_lower + c_upper != 0:
        raise MethodMismatch(
            f"half-zone Chern numbers do not cancel: {c_lower} + {c_upper}"
        )

    period = model.period
    h0 = engine.effective_hamiltonian(u0_path[-1], period, -np.pi).h
    hpi = engine.effective_hamiltonian(upi_path[-1], period, -np.pi).h
    pf = pfaffian_sign_check(h0, hpi, period)
    if pf != v0 * v_pi:
        raise MethodMismatch(
            f"Pfaffian sign product {pf} != V0 V_pi = {v0 * v_pi}"
        )
    return InvariantRecord(v0=v0, v_pi=v_pi, c_h=c_lower)


# ---------------------------------------------------------------------------
# dispatch

_DRIVERS_1D = {"aiii": aiii_record, "dclass": dclass_record}


def invariant_record(model) -> InvariantRecord:
    """Evaluate the invariants a model's family defines, by its tag."""
    tag = getattr(model, "tag", "")
    driver = _DRIVERS_1D.get(tag)
    if driver is not None:
        return driver(model)
    if getattr(model, "dims", 0) == 2:
        return twoda_record(model)
    raise ValidationError(f"no invariant driver for model tag {tag!r}")
