"""Preimage loops of Bloch-vector targets and Gauss linking numbers.

The occupied-band Bloch field n(t, k1, k2) maps the momentum-time 3-torus to
the sphere. The preimage of a regular target value is a family of closed
oriented loops; when the fixed-time Chern number vanishes, the linking number
of the preimages of two targets is the Hopf invariant of the field.

All three torus directions are scaled to [0, 2pi): points are stored as
(k1, k2, t_angle) with t_angle = 2pi t / T, as a continuous (unwrapped) lift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import (
    DegenerateTarget,
    LoopsTooClose,
    NotConverged,
    OpenCurve,
    ValidationError,
)

TAU = 2.0 * np.pi

# interior/grazing margins for the per-triangle linear solve, in barycentric units
_GRAZE = 1e-6
_INSIDE = 1e-9


@dataclass(frozen=True)
class Polyline3:
    """Closed oriented polyline on the (k1, k2, t) 3-torus.

    ``points`` is a continuous lift: consecutive points differ by less than a
    grid cell, and the loop closes exactly in the lift when ``wraps`` is zero.
    """

    points: np.ndarray
    closed: bool
    wraps: tuple[int, int, int]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[-1] != 3 or pts.shape[0] < 3:
            raise ValidationError(f"polyline needs (n>=3, 3) points, got {pts.shape}")
        object.__setattr__(self, "points", pts)

    def edges(self) -> np.ndarray:
        closed_pts = np.vstack([self.points, self.points[:1]])
        return np.diff(closed_pts, axis=0)

    def midpoints(self) -> np.ndarray:
        closed_pts = np.vstack([self.points, self.points[:1]])
        return 0.5 * (closed_pts[:-1] + closed_pts[1:])


def _orthonormal_frame(target: np.ndarray):
    """Right-handed (e1, e2, target) frame: e1 x e2 = target."""
    a = np.array([1.0, 0.0, 0.0])
    if abs(target @ a) > 0.9:
        a = np.array([0.0, 1.0, 0.0])
    e1 = a - (a @ target) * target
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(target, e1)
    return e1, e2


# rotation axes with no rational relation to lattice symmetry planes, so a
# retry never lands back on the symmetric locus that caused the graze
_GENERIC_AXES = (
    np.array([0.5235818995435401, 0.6926342386343671, 0.4963241456765872]),
    np.array([-0.3862278226112225, 0.8533161852645991, 0.3499340482632786]),
    np.array([0.7071912812095375, -0.1628791424466337, 0.6879646364988042]),
)


def _perturbed(target: np.ndarray, attempt: int) -> np.ndarray:
    """Deterministic retry targets: same homotopy class, growing rotation.

    The angle doubles per attempt because a strand pair split off a symmetric
    locus by angle delta stays within one grid cell until delta exceeds the
    cell size; tiny rotations then never separate them.
    """
    if attempt == 0:
        return target
    axis = _GENERIC_AXES[(attempt - 1) % 3]
    axis = axis / np.linalg.norm(axis)
    angle = 2.5e-3 * 2.0 ** (attempt - 1)
    # Rodrigues rotation of the target about a generic axis
    t = target
    rotated = (
        t * np.cos(angle)
        + np.cross(axis, t) * np.sin(angle)
        + axis * (axis @ t) * (1.0 - np.cos(angle))
    )
    return rotated / np.linalg.norm(rotated)


def _triangle_crossings(f1, f2, f3, axis):
    """Crossing points of (f1, f2) = 0 with f3 > 0 on the faces normal to axis.

    Faces normal to ``axis`` span the other two axes (b, c) in cyclic order and
    are split along the base->(+e_b+e_c) diagonal into triangles 0 and 1.
    Returns (records, degenerate) where each record is
    (axis, tri, i0, i1, i2, offset_b, offset_c).
    """
    b, c = (axis + 1) % 3, (axis + 2) % 3
    corner = {
        (0, 0): (f1, f2, f3),
        (1, 0): tuple(np.roll(f, -1, axis=b) for f in (f1, f2, f3)),
        (0, 1): tuple(np.roll(f, -1, axis=c) for f in (f1, f2, f3)),
        (1, 1): tuple(
            np.roll(np.roll(f, -1, axis=b), -1, axis=c) for f in (f1, f2, f3)
        ),
    }
    records = []
    degenerate = False
    # triangle 0: base, +e_b, +e_b+e_c; triangle 1: base, +e_b+e_c, +e_c
    for tri, second, third in ((0, (1, 0), (1, 1)), (1, (1, 1), (0, 1))):
        a1, a2, a3 = corner[(0, 0)]
        b1, b2, b3 = corner[second]
        c1, c2, c3 = corner[third]
        m00, m01 = b1 - a1, c1 - a1
        m10, m11 = b2 - a2, c2 - a2
        det = m00 * m11 - m01 * m10
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (-a1 * m11 + a2 * m01) / det
            u = (-m00 * a2 + m10 * a1) / det
            finite = np.isfinite(s) & np.isfinite(u)
            s = np.where(finite, s, 0.5)
            u = np.where(finite, u, 2.0)  # outside every mask below
            inside = (
                finite
                & (s > _INSIDE)
                & (u > _INSIDE)
                & (s + u < 1.0 - _INSIDE)
            )
            f3_at = a3 + s * (b3 - a3) + u * (c3 - a3)
            hit = inside & (f3_at > 0.0)
            graze = (
                finite
                & (f3_at > 0.0)
                & (s > -_GRAZE)
                & (u > -_GRAZE)
                & (s + u < 1.0 + _GRAZE)
                & (
                    (np.abs(s) < _GRAZE)
                    | (np.abs(u) < _GRAZE)
                    | (np.abs(1.0 - s - u) < _GRAZE)
                )
            )
        if bool(graze.any()):
            degenerate = True
        for idx in np.argwhere(hit):
            i0, i1, i2 = (int(v) for v in idx)
            sv, uv = float(s[i0, i1, i2]), float(u[i0, i1, i2])
            if tri == 0:
                off_b, off_c = sv + uv, uv
            else:
                off_b, off_c = sv, sv + uv
            records.append((axis, tri, i0, i1, i2, off_b, off_c))
    return records, degenerate


def _crossing_position(rec, shape):
    axis, _tri, i0, i1, i2, off_b, off_c = rec
    b, c = (axis + 1) % 3, (axis + 2) % 3
    pos = np.array([i0, i1, i2], dtype=float)
    pos[b] += off_b
    pos[c] += off_c
    return pos


def _adjacent_cubes(rec, shape):
    axis, _tri, i0, i1, i2, _ob, _oc = rec
    base = [i0, i1, i2]
    behind = list(base)
    behind[axis] = (behind[axis] - 1) % shape[axis]
    return tuple(behind), tuple(base)


def _local_tangent(f1, f2, pos, shape):
    """Estimate grad(f1) x grad(f2) near ``pos`` in physical (radian) units."""
    node = tuple(int(np.rint(p)) % n for p, n in zip(pos, shape))
    grads = []
    for f in (f1, f2):
        g = np.empty(3)
        for d in range(3):
            up = list(node)
            dn = list(node)
            up[d] = (up[d] + 1) % shape[d]
            dn[d] = (dn[d] - 1) % shape[d]
            g[d] = (f[tuple(up)] - f[tuple(dn)]) / (2.0 * TAU / shape[d])
        grads.append(g)
    return np.cross(grads[0], grads[1])


def preimage_loops(
    ffo3d: np.ndarray,
    target,
    node_tol: float = 1e-3,
    max_retries: int = 8,
) -> list:
    """Closed oriented preimage loops of ``target`` under the Bloch field.

    ``ffo3d`` has shape (nt, nk1, nk2, 3) with unit Bloch vectors, periodic in
    all three directions. Targets grazed by a grid node (within ``node_tol``
    radians) are deterministically perturbed and retried; reconstruction
    failures that a small perturbation cannot fix raise OpenCurve.
    """
    field = np.asarray(ffo3d, dtype=float)
    if field.ndim != 4 or field.shape[-1] != 3:
        raise ValidationError(f"expected (nt, nk1, nk2, 3) field, got {field.shape}")
    tgt0 = np.asarray(target, dtype=float)
    norm = np.linalg.norm(tgt0)
    if not (0.9 < norm < 1.1):
        raise ValidationError("target must be a unit Bloch vector")
    tgt0 = tgt0 / norm
    shape = field.shape[:3]

    last_problem = "no admissible target found"
    open_curve = False
    for attempt in range(max_retries + 1):
        tgt = _perturbed(tgt0, attempt)
        e1, e2 = _orthonormal_frame(tgt)
        f1 = field @ e1
        f2 = field @ e2
        f3 = field @ tgt
        near_node = (f3 > 0.0) & (np.hypot(f1, f2) < node_tol)
        if bool(near_node.any()):
            last_problem = "grid node within node_tol of target"
            open_curve = False
            continue

        records = []
        degenerate = False
        for axis in range(3):
            recs, dgn = _triangle_crossings(f1, f2, f3, axis)
            records.extend(recs)
            degenerate = degenerate or dgn
        if degenerate:
            last_problem = "crossing grazed a triangle boundary"
            open_curve = False
            continue
        if not records:
            return []

        by_cube: dict = {}
        for ridx, rec in enumerate(records):
            for cube in _adjacent_cubes(rec, shape):
                by_cube.setdefault(cube, []).append(ridx)
        bad = [cube for cube, lst in by_cube.items() if len(lst) not in (0, 2)]
        if bad:
            # multiple strands (or a tangency) inside one cell; a larger
            # target rotation separates them without changing any linking
            last_problem = f"{len(bad)} cells hold more than one strand"
            open_curve = True
            continue

        loops = _walk_loops(records, by_cube, shape, f1, f2)
        if loops is None:
            last_problem = "ambiguous loop orientation"
            open_curve = False
            continue
        return loops

    if open_curve:
        raise OpenCurve(
            f"after {max_retries} perturbations: {last_problem}; refine grid"
        )
    raise DegenerateTarget(
        f"target not regular after {max_retries} perturbations: {last_problem}"
    )


def _walk_loops(records, by_cube, shape, f1, f2):
    positions = [_crossing_position(rec, shape) for rec in records]
    sizes = np.array(shape, dtype=float)
    scale = TAU / sizes

    visited = set()
    loops = []
    for start in range(len(records)):
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        cube = _adjacent_cubes(records[start], shape)[1]
        current = start
        while True:
            pair = by_cube.get(cube, [])
            if len(pair) != 2:
                raise OpenCurve("loop walk dead-ended; refine grid")
            other = pair[0] if pair[1] == current else pair[1]
            if other == start:
                break
            if other in visited:
                raise OpenCurve("loop walk revisited a crossing; refine grid")
            chain.append(other)
            visited.add(other)
            c0, c1 = _adjacent_cubes(records[other], shape)
            cube = c0 if c1 == cube else c1
            current = other
        if len(chain) < 3:
            raise OpenCurve("degenerate short loop; refine grid")

        # continuous lift via minimal-image steps, in index units
        lifted = [positions[chain[0]]]
        for ridx in chain[1:]:
            delta = positions[ridx] - (lifted[-1] % sizes)
            delta = (delta + sizes / 2.0) % sizes - sizes / 2.0
            lifted.append(lifted[-1] + delta)
        closing = positions[chain[0]] - (lifted[-1] % sizes)
        closing = (closing + sizes / 2.0) % sizes - sizes / 2.0
        end = lifted[-1] + closing
        wraps_f = (end - lifted[0]) / sizes
        wraps = tuple(int(np.rint(w)) for w in wraps_f)
        if np.max(np.abs(np.asarray(wraps_f) - np.asarray(wraps))) > 1e-6:
            raise OpenCurve("loop failed to close modulo the torus; refine grid")
        lifted = np.asarray(lifted)

        # orient along grad(f1) x grad(f2): walk direction vs local tangent
        direction = 0.0
        for probe in range(len(chain)):
            v = _local_tangent(f1, f2, positions[chain[probe]], shape)
            step_idx = lifted[(probe + 1) % len(chain)] - lifted[probe]
            if probe + 1 == len(chain):
                step_idx = step_idx + np.asarray(wraps) * sizes
            dot = float(np.dot(step_idx * scale, v))
            norm = np.linalg.norm(step_idx * scale) * np.linalg.norm(v)
            if norm > 0 and abs(dot) > 1e-6 * norm:
                direction = dot
                break
        if direction == 0.0:
            return None
        if direction < 0:
            lifted = lifted[::-1]
            wraps = tuple(-w for w in wraps)

        # physical coordinates, emitted in (k1, k2, t_angle) axis order
        phys = lifted * scale
        pts = phys[:, (1, 2, 0)]
        wraps_out = (wraps[1], wraps[2], wraps[0])
        loops.append(Polyline3(points=pts, closed=True, wraps=wraps_out))
    return loops


def _min_image_distance(a_pts: np.ndarray, b_pts: np.ndarray) -> float:
    best = np.inf
    shifts = [-TAU, 0.0, TAU]
    for sx in shifts:
        for sy in shifts:
            for sz in shifts:
                shift = np.array([sx, sy, sz])
                d = a_pts[:, None, :] - (b_pts[None, :, :] + shift)
                best = min(best, float(np.sqrt((d**2).sum(-1)).min()))
    return best


def _closest_approach(p_lift: np.ndarray, q_lift: np.ndarray):
    """Indices (i, j) and the lattice shift s minimizing |p_i - (q_j + s)|."""
    delta = p_lift[:, None, :] - q_lift[None, :, :]
    shift = TAU * np.rint(delta / TAU)
    d = np.sqrt(((delta - shift) ** 2).sum(-1))
    i, j = np.unravel_index(int(d.argmin()), d.shape)
    return int(i), int(j), shift[i, j]


def _chord(p: np.ndarray, q: np.ndarray, step: float) -> np.ndarray:
    """Interior points of the straight chord p -> q at spacing <= step."""
    n = max(int(np.ceil(np.linalg.norm(q - p) / step)), 1)
    t = np.arange(1, n)[:, None] / n
    return p[None, :] * (1.0 - t) + q[None, :] * t


def _pick_connection(l1: Polyline3, l2: Polyline3, hazards, cell: float, min_sep: float):
    """Connection indices (i, j, shift) whose chord clears the hazard cloud.

    Candidates are scanned in order of strand-to-strand distance; the first
    one whose straight chord stays min_sep away from every hazard point (over
    lattice images) wins. Falls back to the best-clearance candidate.
    """
    delta = l1.points[:, None, :] - l2.points[None, :, :]
    shift = TAU * np.rint(delta / TAU)
    d = np.sqrt(((delta - shift) ** 2).sum(-1))
    order = np.argsort(d, axis=None)
    if hazards is None or not len(hazards):
        i, j = np.unravel_index(int(order[0]), d.shape)
        return int(i), int(j), shift[i, j]
    d_min = float(d.min())
    best = None
    best_clear = -np.inf
    for flat in order[:256]:
        i, j = np.unravel_index(int(flat), d.shape)
        if d[i, j] > d_min + 4.0 * cell:
            break
        p = l1.points[i]
        q = l2.points[j] + shift[i, j]
        probe = np.vstack([p, _chord(p, q, cell), q]) % TAU
        clear = _min_image_distance(probe, hazards)
        if clear >= min_sep:
            return int(i), int(j), shift[i, j]
        if clear > best_clear:
            best_clear = clear
            best = (int(i), int(j), shift[i, j])
    return best


def _contractible_family(loops, hazards=None, min_sep: float = 0.0) -> list:
    """Closed lift representatives with zero wraps, pairing opposite strands.

    A pair of loops with exactly opposite wrap vectors is joined into one
    closed curve in the covering space: run the first strand over one period,
    jump to the second strand's lift one period up, run it back down, and
    return. The two straight connectors are translates of each other traversed
    in opposite directions, so their contributions to any translation-summed
    Gauss integral cancel; they are subdivided to the strand resolution and
    routed away from the other family where possible.
    """
    zero = [l.points for l in loops if all(w == 0 for w in l.wraps)]
    wrapped = [l for l in loops if any(w != 0 for w in l.wraps)]
    out = list(zero)
    pool = list(wrapped)
    while pool:
        l1 = pool.pop(0)
        partner = None
        for idx, l2 in enumerate(pool):
            if all(w1 == -w2 for w1, w2 in zip(l1.wraps, l2.wraps)):
                partner = idx
                break
        if partner is None:
            raise LoopsTooClose(
                f"loop wrapping the torus by {l1.wraps} has no counter-wrapping "
                "partner; no contractible representation"
            )
        l2 = pool.pop(partner)
        w = TAU * np.asarray(l1.wraps, dtype=float)
        cell = float(
            np.median(np.linalg.norm(np.vstack([l1.edges(), l2.edges()]), axis=-1))
        )
        i, j, shift = _pick_connection(l1, l2, hazards, cell, min_sep)
        x, z = l1.points, l2.points
        n, m = len(x), len(z)
        # one full traversal of strand 1 ending one period up at its start;
        # rolled entries that passed the seam continue the lift at +w
        rolled1 = np.roll(x, -i, axis=0)
        rolled1[n - i :] += w
        seq1 = np.vstack([rolled1, [x[i] + w]])
        # strand 2 descends by w, starting one period up
        rolled2 = np.roll(z, -j, axis=0)
        rolled2[m - j :] += -w
        seq2 = np.vstack([rolled2, [z[j] - w]]) + (shift + w)
        chord1 = _chord(seq1[-1], seq2[0], cell)
        chord2 = _chord(seq2[-1], seq1[0], cell)
        out.append(np.vstack([seq1, chord1, seq2, chord2]))
    return out


def _gauss_pair(pa: np.ndarray, pb: np.ndarray) -> float:
    """Gauss integral of lift-closed curve pa against all images of pb."""
    ma = 0.5 * (pa + np.roll(pa, -1, axis=0))
    da = np.roll(pa, -1, axis=0) - pa
    mb = 0.5 * (pb + np.roll(pb, -1, axis=0))
    db = np.roll(pb, -1, axis=0) - pb
    cr = np.cross(da[:, None, :], db[None, :, :])

    ranges = []
    for d in range(3):
        lo = pa[:, d].min() - pb[:, d].max() - TAU
        hi = pa[:, d].max() - pb[:, d].min() + TAU
        ranges.append(np.arange(np.floor(lo / TAU), np.ceil(hi / TAU) + 1) * TAU)
    total = 0.0
    for sx in ranges[0]:
        for sy in ranges[1]:
            for sz in ranges[2]:
                shift = np.array([sx, sy, sz])
                r = ma[:, None, :] - (mb[None, :, :] + shift)
                dist3 = (np.sqrt((r**2).sum(-1))) ** 3
                total += float(((r * cr).sum(-1) / dist3).sum())
    return total


def linking_number(a, b, min_separation=None) -> int:
    """Gauss linking number between two families of torus loops.

    Each family must be closed with zero net wrap in every periodic direction;
    counter-wrapping strand pairs are composed into contractible lift curves,
    and the Gauss integral is summed over enough lattice images of the second
    family to cover the first.
    """
    a = list(a)
    b = list(b)
    if not a or not b:
        return 0
    for loop in (*a, *b):
        if not isinstance(loop, Polyline3):
            raise ValidationError("linking_number expects Polyline3 inputs")
        if not loop.closed:
            raise LoopsTooClose("open polyline; no well-defined linking")
    for name, fam in (("first", a), ("second", b)):
        net = tuple(int(sum(l.wraps[d] for l in fam)) for d in range(3))
        if net != (0, 0, 0):
            raise LoopsTooClose(
                f"{name} family has net torus wrap {net}; "
                "no contractible representation"
            )

    if min_separation is None:
        cell = max(
            float(np.median(np.linalg.norm(loop.edges(), axis=-1)))
            for loop in (*a, *b)
        )
        min_separation = 2.0 * cell
    a_mod = [loop.points % TAU for loop in a]
    b_mod = [loop.points % TAU for loop in b]
    for pa in a_mod:
        for pb in b_mod:
            if _min_image_distance(pa, pb) < min_separation:
                raise LoopsTooClose(
                    f"loop families pass within {min_separation:.3g} of each other"
                )

    hazard_a = np.vstack(b_mod)
    hazard_b = np.vstack(a_mod)
    total = 0.0
    for pa in _contractible_family(a, hazard_a, min_separation):
        for pb in _contractible_family(b, hazard_b, min_separation):
            total += _gauss_pair(pa, pb)
    raw = total / (4.0 * np.pi)
    link = int(np.rint(raw))
    if abs(raw - link) > 0.1:
        raise NotConverged(
            f"linking integral {raw:.4f} is {abs(raw-link):.3f} from integer; refine grid"
        )
    return link
