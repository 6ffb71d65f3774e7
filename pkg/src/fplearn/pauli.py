"""Closed-form 2x2 complex linear algebra on the Pauli basis.

Everything downstream (propagators, flattened Floquet operators, effective
Hamiltonians) runs through these routines, so they are vectorized over
arbitrary leading axes and avoid general-purpose eigensolvers: for 2x2
Hermitian and unitary matrices the spectral data has closed forms that are
both faster and deterministic.
"""

from __future__ import annotations

import numpy as np

from .errors import NonHermitianInput, NonUnitaryInput, ValidationError

ID2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
# Stack (I, sx, sy, sz) used by pauli_compose.
_BASIS = np.stack([ID2, SIGMA_X, SIGMA_Y, SIGMA_Z])

TOL_HERMITIAN = 1e-10
TOL_UNITARY = 1e-8
TOL_DEGENERATE = 1e-9

# sin(x)/x switches to its Taylor polynomial below this |x|.
_SINC_SWITCH = 1e-6


def _as_matrix_array(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim < 2 or a.shape[-2:] != (2, 2):
        raise ValidationError(f"{name} must have shape (..., 2, 2), got {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def pauli_compose(coeffs) -> np.ndarray:
    """Assemble a0*I + ax*sx + ay*sy + az*sz from real coefficients.

    Parameters
    ----------
    coeffs : array_like, shape (..., 4)
        Real coefficients ordered (a0, ax, ay, az).

    Returns
    -------
    ndarray, shape (..., 2, 2), complex
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape[-1] != 4:
        raise ValidationError(f"coefficients must have shape (..., 4), got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValidationError("coefficients contain non-finite entries")
    return np.einsum("...k,kij->...ij", c, _BASIS)


def pauli_decompose(m, tol: float = TOL_HERMITIAN) -> np.ndarray:
    """Project a Hermitian matrix onto (I, sx, sy, sz)/2, returning real coefficients.

    Raises NonHermitianInput when the anti-Hermitian residual exceeds tol.
    """
    a = _as_matrix_array(m)
    resid = np.abs(a - np.conj(np.swapaxes(a, -1, -2))).max()
    if resid > tol:
        raise NonHermitianInput(f"matrix deviates from Hermiticity by {resid:.3e}")
    a0 = 0.5 * (a[..., 0, 0] + a[..., 1, 1]).real
    ax = a[..., 0, 1].real
    ay = -a[..., 0, 1].imag
    az = 0.5 * (a[..., 0, 0] - a[..., 1, 1]).real
    return np.stack([a0, ax, ay, az], axis=-1)


def det2(m) -> np.ndarray:
    """Determinant of 2x2 blocks, closed form."""
    a = np.asarray(m, dtype=complex)
    return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]


def is_hermitian(m, tol: float = TOL_HERMITIAN) -> bool:
    a = _as_matrix_array(m)
    return bool(np.abs(a - np.conj(np.swapaxes(a, -1, -2))).max() <= tol)


def is_unitary(m, tol: float = TOL_UNITARY) -> bool:
    a = _as_matrix_array(m)
    g = np.einsum("...ji,...jk->...ik", np.conj(a), a)
    return bool(np.abs(g - ID2).max() <= tol)


def _sinc(x: np.ndarray) -> np.ndarray:
    # sin(x)/x with a 4-term Taylor branch; accurate to <1e-16 for |x| < 1e-6.
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SWITCH
    safe = np.where(small, 1.0, x)
    x2 = x * x
    taylor = 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    return np.where(small, taylor, np.sin(safe) / safe)


def expm_pauli(coeffs, dt) -> np.ndarray:
    """exp(-i * dt * (a0*I + a.sigma)) from real Pauli coefficients.

    Closed form: e^{-i a0 dt} [cos(|a| dt) I - i sin(|a| dt) (a/|a|).sigma],
    with the |a| -> 0 limit handled by the series branch of sin(x)/x. dt
    may be negative. Vectorized over leading axes of both arguments.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape[-1] != 4:
        raise ValidationError(f"coefficients must have shape (..., 4), got {c.shape}")
    dt = np.asarray(dt, dtype=float)
    a0 = c[..., 0]
    av = c[..., 1:]
    w = np.sqrt(np.sum(av * av, axis=-1))
    x = w * dt
    cosx = np.cos(x)
    # sin(|a| dt) * (a/|a|) = dt * sinc(|a| dt) * a, finite at |a| = 0.
    s = dt * _sinc(x)
    phase = np.exp(-1j * a0 * dt)
    u = np.empty(np.broadcast_shapes(a0.shape, dt.shape) + (2, 2), dtype=complex)
    u[..., 0, 0] = cosx - 1j * s * av[..., 2]
    u[..., 1, 1] = cosx + 1j * s * av[..., 2]
    u[..., 0, 1] = -1j * s * (av[..., 0] - 1j * av[..., 1])
    u[..., 1, 0] = -1j * s * (av[..., 0] + 1j * av[..., 1])
    return phase[..., None, None] * u


def expm_hermitian2(h, dt, tol: float = TOL_HERMITIAN) -> np.ndarray:
    """Propagator exp(-i H dt) for Hermitian 2x2 H (validated)."""
    return expm_pauli(pauli_decompose(h, tol=tol), dt)


def eig_unitary2(u, tol: float = TOL_UNITARY, deg_tol: float = TOL_DEGENERATE):
    """Eigenphases and orthonormal eigenvectors of 2x2 unitary blocks.

    Returns
    -------
    phases : ndarray, shape (..., 2)
        Eigenphases in (-pi, pi], sorted ascending.
    vectors : ndarray, shape (..., 2, 2)
        vectors[..., :, n] is the unit eigenvector for phases[..., n]. The
        gauge is fixed by making the largest-magnitude component real
        positive. The pair is exactly orthonormal by construction.
    degenerate : ndarray of bool, shape (...)
        True where the eigenvalue separation is below deg_tol. There the
        standard basis is returned instead of attempting to resolve the
        eigenvectors.

    Raises NonUnitaryInput when U^dag U deviates from identity beyond tol.
    """
    a = _as_matrix_array(u, "unitary")
    g = np.einsum("...ji,...jk->...ik", np.conj(a), a)
    resid = np.abs(g - ID2).max()
    if resid > tol:
        raise NonUnitaryInput(f"matrix deviates from unitarity by {resid:.3e}")

    tr = a[..., 0, 0] + a[..., 1, 1]
    dt = det2(a)
    disc = np.sqrt(tr * tr - 4.0 * dt)
    z0 = 0.5 * (tr + disc)
    z1 = 0.5 * (tr - disc)
    # Keep the eigenvalues exactly on the unit circle.
    z0 = z0 / np.abs(z0)
    z1 = z1 / np.abs(z1)

    p0 = np.angle(z0)
    p1 = np.angle(z1)
    swap = p0 > p1
    lo = np.where(swap, p1, p0)
    hi = np.where(swap, p0, p1)
    zlo = np.where(swap, z1, z0)
    phases = np.stack([lo, hi], axis=-1)

    degenerate = np.abs(z0 - z1) < deg_tol

    # Eigenvector of the lower-phase eigenvalue from the better-conditioned
    # row of (U - z I); its orthogonal complement is the other eigenvector.
    c1 = np.stack([-a[..., 0, 1], a[..., 0, 0] - zlo], axis=-1)
    c2 = np.stack([zlo - a[..., 1, 1], a[..., 1, 0]], axis=-1)
    n1 = np.sum(np.abs(c1) ** 2, axis=-1)
    n2 = np.sum(np.abs(c2) ** 2, axis=-1)
    v0 = np.where((n1 >= n2)[..., None], c1, c2)
    nrm = np.sqrt(np.sum(np.abs(v0) ** 2, axis=-1, keepdims=True))
    # Degenerate blocks have zero rows; substitute e0 before normalizing.
    e0 = np.zeros_like(v0)
    e0[..., 0] = 1.0
    v0 = np.where(degenerate[..., None], e0, v0 / np.where(nrm == 0.0, 1.0, nrm))

    v1 = np.stack([-np.conj(v0[..., 1]), np.conj(v0[..., 0])], axis=-1)

    def _gauge(v):
        pick = np.abs(v[..., 1]) > np.abs(v[..., 0])
        lead = np.where(pick, v[..., 1], v[..., 0])
        ph = lead / np.abs(lead)
        return v * np.conj(ph)[..., None]

    v0 = _gauge(v0)
    v1 = _gauge(v1)
    vectors = np.stack([v0, v1], axis=-1)
    eye = np.broadcast_to(ID2, vectors.shape)
    vectors = np.where(degenerate[..., None, None], eye, vectors)
    return phases, vectors, degenerate


def bloch_vector(state) -> np.ndarray:
    """Expectation values (n_x, n_y, n_z) of the Pauli matrices in a spinor.

    state has shape (..., 2) and need not be normalized; the result is the
    Bloch vector of state/|state|.
    """
    s = np.asarray(state, dtype=complex)
    if s.shape[-1] != 2:
        raise ValidationError(f"state must have shape (..., 2), got {s.shape}")
    norm = np.sum(np.abs(s) ** 2, axis=-1)
    if np.any(norm == 0.0):
        raise ValidationError("zero state has no Bloch vector")
    cross = np.conj(s[..., 0]) * s[..., 1]
    nx = 2.0 * cross.real / norm
    ny = 2.0 * cross.imag / norm
    nz = (np.abs(s[..., 0]) ** 2 - np.abs(s[..., 1]) ** 2) / norm
    return np.stack([nx, ny, nz], axis=-1)
