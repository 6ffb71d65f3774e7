"""Winding-type invariants: equatorial windings, gap windings of the two
quasienergy gaps, the 3D winding integral, fixed-t Chern numbers, and the
Pontryagin residue relation.

Oracles: hand-built spinor/Bloch fields with known degree (constant, single
twist, Dirac monopole patches), plus drive anchors whose integers are pinned
by the three-phase structure of the modulated hopping models.
"""

import numpy as np
import pytest

from fplearn import engine
from fplearn.engine import GridSpec
from fplearn.errors import (
    ChiralStructureViolated,
    MethodMismatch,
    NonEquatorialState,
    NotConverged,
    SingularPlaquette,
    ValidationError,
)
from fplearn.invariants import (
    aiii_gap_windings,
    aiii_record,
    chern_fixed_t,
    eq6_sign,
    pontryagin_from_gaps,
    winding3,
    winding3_raw,
    winding_equatorial,
)
from fplearn.invariants.records import (
    _winding3_raw_arrays,
    _winding3_raw_streamed,
)
from fplearn.models import AiiiDrive, PiecewiseDrive, TwoDADrive

PI = np.pi


def equatorial_states(phi):
    """Spinors (1, e^{i phi})/sqrt(2): the Bloch azimuth is exactly phi."""
    n = len(phi)
    out = np.empty((n, 2), dtype=complex)
    out[:, 0] = 1.0
    out[:, 1] = np.exp(1j * np.asarray(phi))
    return out / np.sqrt(2.0)


def dirac_lower_band_field(m, nk):
    """Occupied-band Bloch field of h = (sin k1, sin k2, m - cos k1 - cos k2).sigma.

    The lower band of n.sigma points along -n, matching the FFO storage.
    """
    k = 2.0 * PI * np.arange(nk) / nk
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    v = np.stack(
        [np.sin(k1), np.sin(k2), m - np.cos(k1) - np.cos(k2)], axis=-1
    )
    return -v / np.linalg.norm(v, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# winding_equatorial


def test_equatorial_constant_phase_winds_zero():
    states = equatorial_states(np.full(64, 0.37))
    assert winding_equatorial(states) == 0


def test_equatorial_single_twist_winds_one():
    k = 2.0 * PI * np.arange(64) / 64
    assert winding_equatorial(equatorial_states(k)) == 1


def test_equatorial_double_twist_reversed():
    k = 2.0 * PI * np.arange(128) / 128
    assert winding_equatorial(equatorial_states(-2.0 * k)) == -2


def test_equatorial_rejects_polar_states():
    states = np.zeros((32, 2), dtype=complex)
    states[:, 0] = 1.0  # north pole: |n_z| = 1
    with pytest.raises(NonEquatorialState):
        winding_equatorial(states)


# ---------------------------------------------------------------------------
# aiii_gap_windings


def test_gap_windings_structured_forms():
    # W is minus the phase winding of the + entry: u_0^+ off-diagonal at
    # (0, 1), u_pi^+ diagonal at (1, 1)
    k = 2.0 * PI * np.arange(96) / 96
    u0 = np.zeros((96, 2, 2), dtype=complex)
    u0[:, 0, 1] = np.exp(-1j * k)
    u0[:, 1, 0] = np.exp(1j * k)
    upi = np.zeros((96, 2, 2), dtype=complex)
    upi[:, 0, 0] = np.exp(-1j * 2.0 * k)
    upi[:, 1, 1] = np.exp(1j * 2.0 * k)
    w0, w_pi = aiii_gap_windings(u0, upi)
    assert (w0, w_pi) == (1, -2)


def test_gap_windings_reject_wrong_structure():
    k = 2.0 * PI * np.arange(32) / 32
    diag = np.zeros((32, 2, 2), dtype=complex)
    diag[:, 0, 0] = np.exp(1j * k)
    diag[:, 1, 1] = np.exp(-1j * k)
    with pytest.raises(ChiralStructureViolated):
        aiii_gap_windings(diag, diag)  # zero-gap operator must be off-diagonal


# ---------------------------------------------------------------------------
# full AIII records at the three-phase anchors


@pytest.mark.parametrize(
    "theta_re, theta_im, gaps, equatorials",
    [
        (0.2 * PI, 0.2 * PI, (1, 0), (1, 1)),
        (0.4 * PI, 0.2 * PI, (1, 1), (2, 0)),
        (0.6 * PI, 0.2 * PI, (0, 1), (1, -1)),
    ],
)
def test_aiii_record_three_phases(theta_re, theta_im, gaps, equatorials):
    model = AiiiDrive(theta_re=theta_re, theta_im=theta_im, g=0.2 * PI)
    rec = aiii_record(model)
    assert (rec.w0, rec.w_pi) == gaps
    assert (rec.nu0, rec.nu_half) == equatorials
    assert rec.chern is None and rec.v0 is None
    assert eq6_sign(rec) in (0, -1)


def test_aiii_records_share_one_sign_flag():
    rng = np.random.default_rng(7)
    signs = set()
    for _ in range(4):
        theta = rng.uniform(0.1 * PI, 0.9 * PI, size=2)
        rec = aiii_record(AiiiDrive(theta_re=theta[0], theta_im=theta[1], g=0.2 * PI))
        signs.add(eq6_sign(rec))
    assert signs <= {0, -1}


# ---------------------------------------------------------------------------
# winding3


def static_sz_drive(delta=1.0):
    def coeffs(k):
        shape = np.broadcast(*k).shape
        out = np.zeros(shape + (4,))
        out[..., 3] = delta
        return out

    return PiecewiseDrive(segments=((1.0, coeffs),), period=1.0, dims=2, tag="static")


def periodized(model, grid, cut):
    u_path = engine.evolve_grid(model, grid)
    h = engine.effective_hamiltonian(u_path[-1], model.period, cut)
    return engine.periodized_evolution(u_path, h)


def test_winding3_static_trivial_drive():
    grid = GridSpec(nk=12, nt=24, dims=2)
    model = static_sz_drive()
    assert winding3(periodized(model, grid, engine.BRANCH_ZERO)) == 0
    assert winding3(periodized(model, grid, engine.BRANCH_PI)) == 0


def test_winding3_validates_shape_and_endpoints():
    with pytest.raises(ValidationError):
        winding3(np.zeros((4, 4, 2, 2)))
    u = np.zeros((5, 4, 4, 2, 2), dtype=complex)
    u[...] = np.eye(2)
    u[-1, 0, 0] = [[0.0, 1.0], [1.0, 0.0]]
    with pytest.raises(ValidationError):
        winding3(u)


def test_winding3_rejects_far_from_integer():
    # a smooth but non-quantized field: half a twist along t only
    nt, nk = 8, 6
    u = np.zeros((nt + 1, nk, nk, 2, 2), dtype=complex)
    u[...] = np.eye(2)
    with pytest.raises(NotConverged):
        # fabricate a raw value by rounding tolerance: int_tol = -1 forces the raise
        winding3(u, int_tol=-1.0)


TWODA_GAP_ANCHORS = [
    (0.4 * PI, (0, 0)),
    (1.2 * PI, (0, 1)),
    (2.7 * PI, (1, 1)),
]


@pytest.mark.parametrize("j, expected", TWODA_GAP_ANCHORS)
def test_winding3_hopping_drive_anchors(j, expected):
    model = TwoDADrive(j=j, delta=0.5 * PI)
    grid = GridSpec(nk=48, nt=192, dims=2)
    w0 = winding3(periodized(model, grid, engine.BRANCH_ZERO))
    w_pi = winding3(periodized(model, grid, engine.BRANCH_PI))
    assert (w0, w_pi) == expected


def test_winding3_raw_tight_at_default_grid():
    model = TwoDADrive(j=2.7 * PI, delta=0.5 * PI)
    grid = GridSpec(nk=48, nt=192, dims=2)
    raw = winding3_raw(periodized(model, grid, engine.BRANCH_ZERO))
    assert abs(raw - round(raw)) < 0.05


def test_winding3_residual_shrinks_on_doubling():
    model = TwoDADrive(j=2.7 * PI, delta=0.5 * PI)
    raw1 = _winding3_raw_streamed(model, GridSpec(nk=48, nt=192, dims=2), engine.BRANCH_ZERO)
    raw2 = _winding3_raw_streamed(model, GridSpec(nk=96, nt=384, dims=2), engine.BRANCH_ZERO)
    err1 = abs(raw1 - round(raw1))
    err2 = abs(raw2 - round(raw2))
    assert round(raw1) == round(raw2)
    assert err2 < 5e-3
    assert err2 <= err1 / 2.0


def test_winding3_streamed_matches_arrays():
    model = TwoDADrive(j=0.7 * PI, delta=0.5 * PI)
    grid = GridSpec(nk=16, nt=32, dims=2)
    for cut in (engine.BRANCH_ZERO, engine.BRANCH_PI):
        a = _winding3_raw_arrays(model, grid, cut)
        s = _winding3_raw_streamed(model, grid, cut)
        assert abs(a - s) < 1e-12


# ---------------------------------------------------------------------------
# chern_fixed_t


@pytest.mark.parametrize("m, expected", [(1.0, 1), (-1.0, -1), (3.0, 0)])
def test_chern_dirac_anchors(m, expected):
    # degree of the Dirac map: +-1 inside the band-inversion window, else 0
    assert chern_fixed_t(dirac_lower_band_field(m, 32)) == expected


def test_chern_rejects_singular_plaquette():
    n = dirac_lower_band_field(3.0, 16)
    n[3, 5] = -n[4, 5]  # antipodal corners collapse the plaquette trace
    n[3, 6] = -n[4, 6]
    with pytest.raises(SingularPlaquette):
        chern_fixed_t(n)


def test_chern_validates_shape():
    with pytest.raises(ValidationError):
        chern_fixed_t(np.zeros((4, 4, 2)))


# ---------------------------------------------------------------------------
# pontryagin residue


@pytest.mark.parametrize(
    "w0, w_pi, value, modulus",
    [
        (0, 0, 0, 0),
        (-1, -2, 0, 2),
        (0, -1, 1, 2),
        (1, 1, 1, 0),
        (0, 3, 3, 6),  # canonical representative in (-3, 3]
        (3, 0, 0, 6),
        (0, -4, 4, 8),  # -4 is congruent to +4; the range excludes -|m|/2
        (2, -1, -1, 6),
    ],
)
def test_pontryagin_examples(w0, w_pi, value, modulus):
    res = pontryagin_from_gaps(w0, w_pi)
    assert (res.value, res.modulus) == (value, modulus)


def test_record_dispatch_rejects_unknown_models():
    from fplearn.invariants import invariant_record

    class Odd:
        tag = "mystery"
        dims = 7

    with pytest.raises(ValidationError):
        invariant_record(Odd())


def test_record_signature_is_order_stable():
    from fplearn.invariants import InvariantRecord

    a = InvariantRecord(w0=1, w_pi=0)
    b = InvariantRecord(w_pi=0, w0=1)
    assert a.integer_signature() == b.integer_signature()
    assert a.as_dict() == {"w0": 1, "w_pi": 0}


def test_pontryagin_residue_is_congruent():
    rng = np.random.default_rng(3)
    for _ in range(50):
        w0, w_pi = rng.integers(-4, 5, size=2)
        res = pontryagin_from_gaps(int(w0), int(w_pi))
        if res.modulus:
            assert (res.value - w_pi) % res.modulus == 0
            assert -res.modulus / 2 < res.value <= res.modulus / 2
        else:
            assert res.value == w_pi
