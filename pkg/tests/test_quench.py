"""Sudden-quench drives between Chern insulators: the gap windings count the
initial and final Chern numbers, and the Pontryagin residue reduces W_pi.

Oracles: closed-form Dirac Bloch fields with known degree (including the
azimuthally doubled |c| = 2 construction), plus the six-row table of
(c_i, c_f) quenches whose (W_0, W_pi, nu) integers are pinned by the
construction itself.
"""

import numpy as np
import pytest

from fplearn.engine import GridSpec, ffo, floquet_solve
from fplearn.errors import UnsupportedChern, ValidationError
from fplearn.invariants import (
    chern_fixed_t,
    invariant_record,
    quench_construction,
    reference_bloch_field,
)
from fplearn.invariants.quench import QUENCH_PERIOD


def reference_lower_band(c, nk=48):
    k = 2.0 * np.pi * np.arange(nk) / nk
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    nx, ny, nz = reference_bloch_field(c, k1, k2)
    return -np.stack([nx, ny, nz], axis=-1)


# ---------------------------------------------------------------------------
# reference fields


@pytest.mark.parametrize("c", [-2, -1, 0, 1, 2])
def test_reference_field_carries_its_chern_number(c):
    assert chern_fixed_t(reference_lower_band(c)) == c


def test_reference_field_rejects_large_chern():
    with pytest.raises(UnsupportedChern):
        reference_bloch_field(3, 0.0, 0.0)


def test_reference_field_is_unit_norm():
    n = reference_lower_band(2, nk=32)
    np.testing.assert_allclose(np.linalg.norm(n, axis=-1), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# quench construction


def test_construction_validates_inputs():
    with pytest.raises(UnsupportedChern):
        quench_construction(3, 0)
    with pytest.raises(UnsupportedChern):
        quench_construction(0.5, 0)
    with pytest.raises(ValidationError):
        quench_construction(0, 1, delta=0.0)
    with pytest.raises(ValidationError):
        quench_construction(0, 1, delta=0.06)


def test_construction_period_and_params():
    drive = quench_construction(1, -1, delta=0.02)
    assert drive.period == QUENCH_PERIOD
    params = drive.params()
    assert params["c_i"] == 1 and params["c_f"] == -1
    assert params["delta"] == 0.02 and params["period"] == QUENCH_PERIOD


def test_occupied_band_stays_in_initial_ground_state():
    # the short final-Hamiltonian segment is a weak kick: the occupied FFO
    # keeps the initial Chern number at every stored t
    drive = quench_construction(-1, 1)
    sol = floquet_solve(drive, GridSpec(nk=32, nt=8, dims=2))
    q = ffo(sol).q
    assert {chern_fixed_t(q[m]) for m in range(8)} == {-1}


# ---------------------------------------------------------------------------
# the (c_i, c_f) table

QUENCH_TABLE = [
    (0, -1, -1, -1, -1),
    (1, -1, -1, -2, 0),
    (0, 1, 1, 1, 1),
    (1, 0, 0, -1, 1),
    (-1, 0, 0, 1, 1),
    (-1, 1, 1, 2, 0),
]


@pytest.mark.parametrize("c_i, c_f, w0, w_pi, nu", QUENCH_TABLE)
def test_quench_table_row(c_i, c_f, w0, w_pi, nu):
    rec = invariant_record(quench_construction(c_i, c_f))
    assert (rec.w0, rec.w_pi) == (w0, w_pi)
    assert rec.nu_value == nu
    assert rec.nu_modulus == abs(2 * (w_pi - w0))
    assert rec.chern == c_i
    if c_i == 0:
        # the preimage linking number measures the same anomaly directly
        assert rec.link == nu
    else:
        assert rec.link is None


def test_trivial_quench_is_all_zero():
    rec = invariant_record(quench_construction(0, 0))
    assert rec.as_dict() == {
        "w0": 0,
        "w_pi": 0,
        "chern": 0,
        "link": 0,
        "nu_value": 0,
        "nu_modulus": 0,
    }
