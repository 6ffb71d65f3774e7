"""Preimage-loop extraction and Gauss linking numbers on the 3-torus.

Oracles: hand-parameterized circle pairs whose linking is known (disjoint
circles link 0, the canonical interlocked pair links 1 up to orientation),
static Bloch fields with analytically known preimages, and the two reference
drive anchors whose linking integers label the trivial and anomalous phases.
"""

import numpy as np
import pytest

from fplearn.engine import GridSpec, ffo, floquet_solve
from fplearn.errors import LoopsTooClose, ValidationError
from fplearn.invariants import Polyline3, linking_number, preimage_loops
from fplearn.models import TwoDADrive

TAU = 2.0 * np.pi


def circle(center, radius, plane, n=200, reverse=False):
    """Closed circle polyline in a coordinate plane ("xy" or "xz")."""
    s = np.linspace(0.0, TAU, n, endpoint=False)
    if reverse:
        s = s[::-1]
    pts = np.tile(np.asarray(center, dtype=float), (n, 1))
    i, j = {"xy": (0, 1), "xz": (0, 2)}[plane]
    pts[:, i] += radius * np.cos(s)
    pts[:, j] += radius * np.sin(s)
    return Polyline3(points=pts, closed=True, wraps=(0, 0, 0))


def dirac_field(m, nk, nt):
    """Static Bloch field of the Dirac model, tiled along t."""
    k = np.arange(nk) * TAU / nk
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    n = np.stack([np.sin(k1), np.sin(k2), m - np.cos(k1) - np.cos(k2)], axis=-1)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    return np.broadcast_to(n, (nt, nk, nk, 3)).copy()


# ---------------------------------------------------------------------------
# linking_number on hand-built loops


def test_disjoint_parallel_circles_do_not_link():
    a = circle((np.pi, np.pi, np.pi), 1.0, "xy")
    b = circle((np.pi, np.pi, np.pi + 2.0), 1.0, "xy")
    assert linking_number([a], [b]) == 0


def test_canonical_interlocked_pair():
    a = circle((np.pi, np.pi, np.pi), 1.0, "xy")
    b = circle((np.pi + 1.0, np.pi, np.pi), 1.0, "xz")
    assert linking_number([a], [b]) == -1


def test_orientation_reversal_flips_sign():
    a = circle((np.pi, np.pi, np.pi), 1.0, "xy")
    b = circle((np.pi + 1.0, np.pi, np.pi), 1.0, "xz", reverse=True)
    assert linking_number([a], [b]) == 1
    a_rev = circle((np.pi, np.pi, np.pi), 1.0, "xy", reverse=True)
    assert linking_number([a_rev], [b]) == -1


def test_empty_family_links_zero():
    a = circle((np.pi, np.pi, np.pi), 1.0, "xy")
    assert linking_number([], [a]) == 0
    assert linking_number([a], []) == 0


def test_linking_rejects_open_or_foreign_loops():
    a = circle((np.pi, np.pi, np.pi), 1.0, "xy")
    with pytest.raises(ValidationError):
        linking_number([a.points], [a])
    open_loop = Polyline3(points=a.points, closed=False, wraps=(0, 0, 0))
    with pytest.raises(LoopsTooClose):
        linking_number([open_loop], [a])


def test_linking_rejects_net_family_wrap():
    s = np.linspace(0.0, TAU, 50, endpoint=False)
    line = np.stack([np.full_like(s, 1.0), np.full_like(s, 2.0), s], axis=-1)
    wrapping = Polyline3(points=line, closed=True, wraps=(0, 0, 1))
    a = circle((np.pi, np.pi, np.pi), 1.0, "xy")
    with pytest.raises(LoopsTooClose):
        linking_number([wrapping], [a])


def test_linking_rejects_touching_families():
    a = circle((np.pi, np.pi, np.pi), 1.0, "xy")
    b = circle((np.pi, np.pi, np.pi), 1.001, "xy")  # nearly coincident
    with pytest.raises(LoopsTooClose):
        linking_number([a], [b])


def test_counter_wrapping_pair_is_admitted():
    # two straight t-lines wrapping oppositely: net family wrap is zero, and
    # they do not link a far-away contractible circle
    s = np.linspace(0.0, TAU, 64, endpoint=False)
    up = Polyline3(
        points=np.stack([np.full_like(s, 2.0), np.full_like(s, 2.0), s], axis=-1),
        closed=True,
        wraps=(0, 0, 1),
    )
    down = Polyline3(
        points=np.stack([np.full_like(s, 2.6), np.full_like(s, 2.6), s[::-1]], axis=-1),
        closed=True,
        wraps=(0, 0, -1),
    )
    probe = circle((5.3, 5.3, np.pi), 0.5, "xy")
    assert linking_number([up, down], [probe]) == 0


def test_polyline_validates_shape():
    with pytest.raises(ValidationError):
        Polyline3(points=np.zeros((2, 3)), closed=True, wraps=(0, 0, 0))
    with pytest.raises(ValidationError):
        Polyline3(points=np.zeros((8, 2)), closed=True, wraps=(0, 0, 0))


# ---------------------------------------------------------------------------
# preimage_loops on static fields


def test_preimage_validates_inputs():
    field = dirac_field(3.0, 12, 6)
    with pytest.raises(ValidationError):
        preimage_loops(field[..., :2], (0.0, 0.0, -1.0))
    with pytest.raises(ValidationError):
        preimage_loops(field, (0.0, 0.0, -2.0))


def test_preimage_unreached_target_is_empty():
    # m = 3 keeps n_z > 0 everywhere, so the south pole has empty preimage
    field = dirac_field(3.0, 24, 12)
    assert preimage_loops(field, (0.0, 0.0, -1.0)) == []


def test_preimage_of_static_band_touching_point_wraps_t():
    # m = 1: n = -z exactly at k = (0, 0) for all t; the preimage is a single
    # t-wrapping line, which has no linking representation
    field = dirac_field(1.0, 24, 12)
    loops = preimage_loops(field, (0.0, 0.0, -1.0))
    assert len(loops) == 1
    assert abs(loops[0].wraps[2]) == 1
    with pytest.raises(LoopsTooClose):
        linking_number(loops, loops)


# ---------------------------------------------------------------------------
# drive anchors

RED = (0.0, 0.0, -1.0)
BLUE = (-1.0 / np.sqrt(2.0), 0.0, -1.0 / np.sqrt(2.0))


def drive_loops(j_over_pi):
    model = TwoDADrive(j=j_over_pi * np.pi, delta=0.5 * np.pi)
    sol = floquet_solve(model, GridSpec(nk=48, nt=48, dims=2))
    q = ffo(sol).q
    return preimage_loops(q, RED), preimage_loops(q, BLUE)


def test_trivial_drive_preimages_do_not_link():
    red, blue = drive_loops(0.4)
    assert len(red) == 2
    assert sorted(l.wraps[2] for l in red) == [-1, 1]  # counter-wrapping pair
    assert all(l.wraps == (0, 0, 0) for l in blue)
    assert linking_number(red, blue) == 0


def test_anomalous_drive_preimages_link_once():
    red, blue = drive_loops(2.7)
    assert sum(l.wraps[0] for l in red) == 0
    assert linking_number(red, blue) == 1


def test_preimages_close_and_stay_on_lattice_cells():
    red, blue = drive_loops(2.7)
    cell = TAU / 48.0
    for loop in (*red, *blue):
        assert loop.closed
        # lift continuity: consecutive points stay within one grid cell
        assert np.abs(np.diff(loop.points, axis=0)).max() < 2.0 * cell
        # the lift closes once the wrap counts are unwound
        gap = loop.points[0] + TAU * np.asarray(loop.wraps) - loop.points[-1]
        assert np.abs(gap).max() < 2.0 * cell
