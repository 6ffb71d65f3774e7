"""Determinant similarity kernel over flattened Floquet operator fields.

Each sample is a field Q(k,t) = -n(k,t).sigma on a shared momentum-time
grid.  The pair similarity multiplies, over every grid node, the factor

    1 - exp(-|det(Q_i + Q_j)|^2 / epsilon^2),

which is ~1 where the two Bloch vectors agree (|det(2Q)| = 4) and drops to 0
at any node where they are antiparallel (Q_i + Q_j singular).  Two fields in
the same phase can be deformed into each other without the vectors ever
anti-aligning, so the product stays near 1; fields in different phases must
pass through a spin flip and the product collapses.

A spin flip is a point- or curve-like feature and need not pass through a
grid node, so the node product alone can miss it on a coarse grid.  Two
interpolation guards close the gap, and either one zeroes the pair exactly,
matching the continuum product:

* rows on which both fields lie in the equatorial plane carry their spin
  flips inside the row; a sign change of the relative azimuth against pi
  between adjacent nodes pins one down regardless of how steeply it is
  crossed.
* elsewhere, a flip inside a grid cell forces the summed field n_i + n_j to
  wind around zero on a cell face; the winding is read off geodesically
  interpolated boundary samples of every near-antipodal face.  Since
  (n_i + n_j) . (n_i - n_j) = 0 identically, the summed field is locally a
  two-component field over the face and a nonzero boundary winding implies
  an interior zero.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..errors import GridMismatch, ValidationError

# |det| ranges over [0, 4]; epsilon far below that keeps factors saturated
# except very near an anti-alignment.
DEFAULT_EPSILON = 0.01

# A single factor below this floor forces the whole product to zero before
# any logarithm is taken.
FACTOR_FLOOR = 1e-300

# Pairs whose node product is already below this skip the interpolation
# guards; the guards can only push entries further toward zero.
ALIVE_LOG = float(np.log(1e-12))

# A row counts as equatorial when every |n_z| on it is below this.
EQUATORIAL_TOL = 1e-8

# A face joins the winding test when n_i . n_j < FLIP_GATE at any corner.
FLIP_GATE = -0.5

# Interpolation points per grid edge in the winding test.
EDGE_SAMPLES = 4

# Boundary winding counts as a flip when within this of a nonzero integer.
WINDING_TOL = 0.25

# |n_i + n_j| on a face boundary below this is a flip on the boundary.
BOUNDARY_FLIP_TOL = 1e-5

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric pairwise similarity matrix with entries in [0, 1]."""

    n: int
    entries: np.ndarray  # (n, n)
    epsilon: float


def _flat(field) -> np.ndarray:
    vecs = field.flat_vectors()
    if vecs.ndim != 2 or vecs.shape[1] != 3:
        raise ValidationError(f"expected (n_nodes, 3) vectors, got {vecs.shape}")
    if not np.all(np.isfinite(vecs)):
        raise ValidationError("field contains non-finite entries")
    return vecs


def _check_shared_grid(a, b) -> None:
    if a.grid != b.grid or a.q.shape != b.q.shape:
        raise GridMismatch(
            f"fields sampled on different grids: {a.grid} vs {b.grid}"
        )


def _log_kernel_rows(vecs_i: np.ndarray, vecs_rest: np.ndarray, epsilon: float) -> np.ndarray:
    """log K(i, j) against a block of samples, -inf where a factor floors.

    vecs_i is (m, 3); vecs_rest is (r, m, 3).  For Q = -n.sigma the node
    determinant is det(Q_i + Q_j) = -|n_i + n_j|^2, so
    |det|^2 / eps^2 = |n_i + n_j|^4 / eps^2.
    """
    s = vecs_rest + vecs_i
    sum_sq = np.einsum("rmc,rmc->rm", s, s)
    x = (sum_sq * sum_sq) / (epsilon * epsilon)
    # -expm1(-x) = 1 - e^{-x} at full precision near zero
    factors = -np.expm1(-x)
    out = np.empty(x.shape[0])
    for r in range(x.shape[0]):
        row = factors[r]
        if row.min() < FACTOR_FLOOR:
            out[r] = -np.inf
        else:
            out[r] = np.sum(np.log(row))
    return out


def _wrap_pi(x: np.ndarray) -> np.ndarray:
    """Wrap angles to [-pi, pi)."""
    return (x + np.pi) % _TWO_PI - np.pi


def _unit_slerp(a: np.ndarray, b: np.ndarray, fracs: np.ndarray) -> np.ndarray:
    """Geodesic interpolation from unit vectors a toward b at given fractions.

    a, b: (..., 3); fracs: (f,).  Returns (..., f, 3).  Nearly parallel pairs
    fall back to linear interpolation; the result is renormalized throughout.
    """
    dot = np.clip(np.einsum("...c,...c->...", a, b), -1.0, 1.0)
    ang = np.arccos(dot)[..., None]
    sin_ang = np.sin(ang)
    safe = sin_ang > 1e-6
    wa = np.where(safe, np.sin((1.0 - fracs) * ang), 1.0 - fracs)
    wb = np.where(safe, np.sin(fracs * ang), fracs)
    den = np.where(safe, sin_ang, 1.0)
    out = (wa / den)[..., None] * a[..., None, :] + (wb / den)[..., None] * b[..., None, :]
    norm = np.linalg.norm(out, axis=-1, keepdims=True)
    return out / np.maximum(norm, 1e-30)


def _edge_tables(q: np.ndarray) -> list[np.ndarray]:
    """Per-axis geodesic edge samples, float32, E[ax][..., r, :].

    E[ax] at node x interpolates from x toward its +1 neighbor along axis
    ax at fractions r / EDGE_SAMPLES (r = 0 is the node itself); all axes
    wrap periodically.
    """
    fracs = np.arange(EDGE_SAMPLES) / EDGE_SAMPLES
    tabs = []
    for ax in range(q.ndim - 1):
        nb = np.roll(q, -1, axis=ax)
        tabs.append(_unit_slerp(q, nb, fracs).astype(np.float32))
    return tabs


def _row_flip_hits(az_i: np.ndarray, eq_i: np.ndarray, az_b: np.ndarray,
                   eq_b: np.ndarray) -> np.ndarray:
    """Pairs whose relative azimuth crosses pi inside a shared equatorial row.

    az_i: (nt, L); az_b: (B, nt, L); eq_i: (nt,); eq_b: (B, nt), where L runs
    over the subdivided row (EDGE_SAMPLES interpolants per node edge keep
    each azimuth step well below pi, so the short arc is unambiguous).
    Between adjacent samples e = wrap(az_i - az_j - pi) changing sign along
    the short arc is a spin flip; a sign change of e through +-pi instead
    means the azimuths met (parallel vectors) and the product test ignores
    it.
    """
    hits = np.zeros(az_b.shape[0], dtype=bool)
    rows = np.nonzero(eq_i)[0]
    if rows.size == 0:
        return hits
    e = _wrap_pi(az_i[rows][None, :, :] - az_b[:, rows] - np.pi)
    de = _wrap_pi(np.roll(e, -1, axis=2) - e)
    cross = (e * (e + de) < 0.0) & eq_b[:, rows][:, :, None]
    return cross.any(axis=(1, 2))


def _face_flip_hits(shape: tuple, a: int, b: int, qi: np.ndarray,
                    ei: list, q_all: np.ndarray, e_all: list,
                    js: np.ndarray, gate_b: np.ndarray) -> np.ndarray:
    """Pairs with a winding (or on-boundary) spin flip on an (a, b) grid face.

    qi: (*shape, 3) and ei: edge tables of sample i; q_all/e_all: stacked
    node vectors and edge tables of the whole dataset; js: (B,) global
    sample indices of the batch; gate_b: (B, *shape) node-level gate.  Faces
    are tested when any of their four corners is gated; the boundary loop is
    walked corner to corner with EDGE_SAMPLES interpolants per edge.
    """
    hits = np.zeros(len(js), dtype=bool)
    cand = gate_b | np.roll(gate_b, -1, axis=1 + a)
    cand = cand | np.roll(cand, -1, axis=1 + b)
    idx = np.nonzero(cand)
    p = idx[0]
    if p.size == 0:
        return hits
    jg = js[p]

    def shifted(coords, ax):
        out = list(coords)
        out[ax] = (out[ax] + 1) % shape[ax]
        return tuple(out)

    c0 = tuple(idx[1:])
    ca = shifted(c0, a)
    cb = shifted(c0, b)
    cab = shifted(ca, b)

    # boundary loop: +a edge from c0, +b edge from ca, then back along the
    # reversed +a edge from cb and the reversed +b edge from c0
    s1 = ei[a][c0] + e_all[a][(jg,) + c0]
    s2 = ei[b][ca] + e_all[b][(jg,) + ca]
    s3 = (ei[a][cb] + e_all[a][(jg,) + cb])[:, ::-1]
    s4 = (ei[b][c0] + e_all[b][(jg,) + c0])[:, ::-1]
    loop = np.concatenate([s1, s2, s3, s4], axis=1)

    # n_i + n_j is orthogonal to n_i - n_j, so near a flip it is a
    # two-component field over the face; project onto the plane normal to
    # the mean corner difference and read the boundary winding there.
    d = qi[c0] - q_all[(jg,) + c0]
    for corner in (ca, cb, cab):
        d = d + qi[corner] - q_all[(jg,) + corner]
    d = d / np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-12)
    h = np.zeros_like(d)
    h[np.arange(len(d)), np.argmin(np.abs(d), axis=1)] = 1.0
    e1 = h - np.einsum("mc,mc->m", h, d)[:, None] * d
    e1 = e1 / np.maximum(np.linalg.norm(e1, axis=1, keepdims=True), 1e-12)
    e2 = np.cross(d, e1)

    u1 = np.einsum("mfc,mc->mf", loop, e1)
    u2 = np.einsum("mfc,mc->mf", loop, e2)
    s_sq = np.einsum("mfc,mfc->mf", loop, loop)
    on_boundary = s_sq.min(axis=1) < BOUNDARY_FLIP_TOL * BOUNDARY_FLIP_TOL

    ang = np.arctan2(u2, u1)
    steps = _wrap_pi(np.roll(ang, -1, axis=1) - ang)
    wind = steps.sum(axis=1) / _TWO_PI
    nearest = np.rint(wind)
    winds = (np.abs(nearest) >= 1.0) & (np.abs(wind - nearest) < WINDING_TOL)

    face_hit = on_boundary | winds
    hits[p[face_hit]] = True
    return hits


class _FlipGuard:
    """Shared per-dataset tables for the sub-node spin-flip tests."""

    def __init__(self, vecs: np.ndarray, shape: tuple):
        n = vecs.shape[0]
        self.shape = shape
        q = vecs.reshape((n,) + shape + (3,))
        self.q32 = q.astype(np.float32)
        self.edges = [
            np.stack([_edge_tables(q[s])[ax] for s in range(n)])
            for ax in range(len(shape))
        ]
        if len(shape) == 2:
            # subdivided azimuths along k from the geodesic edge samples;
            # slerp between equatorial unit vectors interpolates the azimuth
            # along the short arc exactly
            ek = self.edges[1]
            self.az = np.arctan2(ek[..., 1], ek[..., 0]).reshape(
                (n, shape[0], shape[1] * EDGE_SAMPLES)
            )
            self.eq = np.stack(
                [np.abs(q[s, ..., 2]).max(axis=1) < EQUATORIAL_TOL for s in range(n)]
            )
        else:
            self.az = None
            self.eq = None

    def hits(self, i: int, js: np.ndarray, vecs: np.ndarray) -> np.ndarray:
        """Pairs (i, js) with a spin flip between grid nodes."""
        out = np.zeros(len(js), dtype=bool)
        if self.az is not None:
            out |= _row_flip_hits(self.az[i], self.eq[i], self.az[js], self.eq[js])
        alive = np.nonzero(~out)[0]
        if alive.size == 0:
            return out
        js_a = js[alive]
        dots = np.einsum("mc,bmc->bm", vecs[i], vecs[js_a])
        gate_b = (dots < FLIP_GATE).reshape((len(js_a),) + self.shape)
        if not gate_b.any():
            return out
        ei = [self.edges[ax][i] for ax in range(len(self.shape))]
        face = np.zeros(len(js_a), dtype=bool)
        for a, b in combinations(range(len(self.shape)), 2):
            todo = np.nonzero(~face)[0]
            if todo.size == 0:
                break
            face[todo] |= _face_flip_hits(
                self.shape, a, b, self.q32[i], ei, self.q32, self.edges,
                js_a[todo], gate_b[todo],
            )
        out[alive[face]] = True
        return out


def kernel_entries_from_vectors(vecs: np.ndarray, epsilon: float, jobs: int = 1,
                                node_shape: tuple | None = None) -> np.ndarray:
    """Pairwise kernel entries for stacked node vectors of shape (n, m, 3).

    Upper-triangle rows are computed independently (optionally across
    ``jobs`` threads) and assembled in index order, so the result does not
    depend on scheduling.  When ``node_shape`` (the momentum-time grid shape
    with m nodes) is given, the interpolation guards run and zero out pairs
    whose spin flips fall between grid nodes; without it only the node
    product is available.
    """
    n = vecs.shape[0]
    guard = None
    if node_shape is not None:
        shape = tuple(int(s) for s in node_shape)
        if int(np.prod(shape)) != vecs.shape[1]:
            raise ValidationError(
                f"node_shape {shape} does not match {vecs.shape[1]} nodes"
            )
        if len(shape) >= 2:
            guard = _FlipGuard(vecs, shape)

    def upper_row(i: int) -> np.ndarray:
        logs = _log_kernel_rows(vecs[i], vecs[i:], epsilon)
        if guard is not None:
            alive = np.nonzero(logs > ALIVE_LOG)[0]
            alive = alive[alive > 0]  # self-similarity has no flips
            if alive.size:
                hit = guard.hits(i, i + alive, vecs)
                logs[alive[hit]] = -np.inf
        return logs

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(upper_row, range(n)))
    else:
        rows = [upper_row(i) for i in range(n)]

    log_k = np.empty((n, n))
    for i, row in enumerate(rows):
        log_k[i, i:] = row
        log_k[i:, i] = row
    return np.where(np.isfinite(log_k), np.exp(log_k), 0.0)


def kernel_entry(field_i, field_j, epsilon: float = DEFAULT_EPSILON) -> float:
    """Similarity of two FFO fields on the same grid, in [0, 1].

    The per-node factors are accumulated in log space; any factor below
    1e-300, or a spin flip detected between grid nodes, short-circuits the
    product to exactly 0.
    """
    if epsilon <= 0.0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    _check_shared_grid(field_i, field_j)
    vecs = np.stack([_flat(field_i), _flat(field_j)])
    entries = kernel_entries_from_vectors(
        vecs, epsilon, node_shape=field_i.q.shape[:-1]
    )
    return float(entries[0, 1])


def kernel_matrix(fields, epsilon: float = DEFAULT_EPSILON, jobs: int = 1) -> KernelMatrix:
    """Full pairwise kernel over a dataset of FFO fields on one shared grid."""
    fields = list(fields)
    n = len(fields)
    if n < 2:
        raise ValidationError(f"kernel matrix needs at least 2 samples, got {n}")
    if epsilon <= 0.0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    for f in fields[1:]:
        _check_shared_grid(fields[0], f)
    vecs = np.stack([_flat(f) for f in fields])  # (n, m, 3)
    entries = kernel_entries_from_vectors(
        vecs, epsilon, jobs=jobs, node_shape=fields[0].q.shape[:-1]
    )
    return KernelMatrix(n=n, entries=entries, epsilon=float(epsilon))
