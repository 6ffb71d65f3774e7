"""Model catalog: instantaneous Hamiltonians and segment layouts."""

import numpy as np
import pytest

from fplearn.errors import OutOfRangeTime, ValidationError
from fplearn.models import (
    AiiiDrive,
    DClassDrive,
    PiecewiseDrive,
    TwoDADrive,
    hamiltonian_at,
)
from fplearn.pauli import SIGMA_X, SIGMA_Y, SIGMA_Z

PI = np.pi


def test_aiii_at_k0_t0():
    # at k=0, t=0: (theta_re + 0.6 pi/T + 2g) sx + theta_im sy
    g = 0.13
    m = AiiiDrive(theta_re=0.2 * PI, theta_im=0.2 * PI, g=g, period=1.0)
    h = hamiltonian_at(m, 0.0, 0.0)
    want = (0.2 * PI + 0.6 * PI + 2 * g) * SIGMA_X + 0.2 * PI * SIGMA_Y
    np.testing.assert_allclose(h, want, atol=1e-14)


def test_aiii_gamma_midperiod():
    m = AiiiDrive(0.0, 0.0, g=0.3, period=2.0)
    # cos(omega T/2) = -1
    assert m.gamma(1.0) == pytest.approx(0.6 * PI / 2.0 - 0.6, abs=1e-14)


def test_twoda_last_segment_is_pure_sublattice_offset():
    m = TwoDADrive(j=1.7, delta=0.4, period=1.0)
    for k in [(0.0, 0.0), (1.0, 2.0), (4.4, 0.3)]:
        h = hamiltonian_at(m, k, 0.9)
        np.testing.assert_allclose(h, 0.4 * SIGMA_Z, atol=1e-14)


def test_twoda_segment_boundaries_left_closed():
    m = TwoDADrive(j=1.0, delta=0.0, period=1.0)
    k = (0.7, 1.9)
    # exactly at t = T/5 the second segment applies: phi = k1
    h = hamiltonian_at(m, k, 0.2)
    phi = 0.7
    want = np.cos(phi) * SIGMA_X - np.sin(phi) * SIGMA_Y
    np.testing.assert_allclose(h, want, atol=1e-14)
    # just below, the first segment still applies
    h0 = hamiltonian_at(m, k, 0.2 - 1e-9)
    np.testing.assert_allclose(h0, SIGMA_X, atol=1e-14)


def test_twoda_hopping_segments_phase():
    m = TwoDADrive(j=2.0, delta=0.1, period=1.0)
    k1, k2 = 0.9, 2.3
    for t, phi in [(0.25, k1), (0.45, k1 + k2), (0.65, k2)]:
        h = hamiltonian_at(m, (k1, k2), t)
        want = 2.0 * np.cos(phi) * SIGMA_X - 2.0 * np.sin(phi) * SIGMA_Y + 0.1 * SIGMA_Z
        np.testing.assert_allclose(h, want, atol=1e-13)
        # upper-right entry is J e^{i phi}
        assert h[0, 1] == pytest.approx(2.0 * np.exp(1j * phi), abs=1e-13)


def test_dclass_second_half_at_k0():
    m = DClassDrive(j1=3.0, j2=1.5, g=0.7, period=1.0)
    h = hamiltonian_at(m, 0.0, 0.75)
    np.testing.assert_allclose(h, 1.5 * SIGMA_Y, atol=1e-14)


def test_dclass_first_half():
    m = DClassDrive(j1=2.0, j2=1.0, g=0.5, period=1.0)
    k = 1.1
    h = hamiltonian_at(m, k, 0.1)
    want = -2.0 * np.sin(k) * SIGMA_X + 2.0 * np.cos(k) * SIGMA_Y + 0.5 * np.sin(k) * SIGMA_Z
    np.testing.assert_allclose(h, want, atol=1e-14)


def test_time_out_of_range():
    m = AiiiDrive(0.1, 0.1, 0.1, period=1.0)
    with pytest.raises(OutOfRangeTime):
        hamiltonian_at(m, 0.0, 1.0)
    with pytest.raises(OutOfRangeTime):
        hamiltonian_at(m, 0.0, -0.01)
    # D class with a longer period accepts t in [0, T)
    md = DClassDrive(1.0, 1.0, 0.0, period=3.0)
    hamiltonian_at(md, 0.0, 2.9)
    with pytest.raises(OutOfRangeTime):
        hamiltonian_at(md, 0.0, 3.0)


def test_momentum_arity_enforced():
    m2 = TwoDADrive(1.0, 0.0, period=1.0)
    with pytest.raises(ValidationError):
        hamiltonian_at(m2, 0.3, 0.0)  # needs a (kx, ky) pair


def test_piecewise_fraction_validation():
    ok = PiecewiseDrive(
        segments=((0.5, lambda k: [0, 0, 0, 1.0]), (0.5, lambda k: [0, 0, 0, -1.0])),
        period=1.0,
    )
    table = ok.segment_table()
    assert table[0][:2] == (0.0, 0.5)
    assert table[1][:2] == (0.5, 1.0)
    with pytest.raises(ValidationError):
        PiecewiseDrive(segments=((0.5, lambda k: [0, 0, 0, 1.0]),), period=1.0)
    with pytest.raises(ValidationError):
        PiecewiseDrive(
            segments=((0.6, lambda k: [0, 0, 0, 1]), (0.6, lambda k: [0, 0, 0, 1])),
            period=1.0,
        )
    with pytest.raises(ValidationError):
        AiiiDrive(0.1, 0.1, 0.1, period=-1.0)


def test_params_round_trip():
    m = DClassDrive(j1=2.0, j2=1.0, g=0.5, period=2.0)
    assert DClassDrive(**m.params()) == m
    a = AiiiDrive(0.3, 0.4, 0.1, period=1.5)
    assert AiiiDrive(**a.params()) == a
