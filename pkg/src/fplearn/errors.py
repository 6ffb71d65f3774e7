"""Exception taxonomy shared across the library.

Every failure mode that callers are expected to handle gets its own class so
that batch drivers can catch narrowly (e.g. skip gap-closed samples while
letting genuine bugs propagate).
"""

from __future__ import annotations


class FplearnError(Exception):
    """Base class for all library errors."""


class ValidationError(FplearnError, ValueError):
    """Malformed array input: wrong shape, dtype, or non-finite entries."""


class NonHermitianInput(ValidationError):
    pass


class NonUnitaryInput(ValidationError):
    pass


class OutOfRangeTime(ValidationError):
    """Time argument outside the driving period [0, T)."""


class GapClosed(FplearnError):
    """A quasienergy gap needed by the requested computation is closed.

    Attributes
    ----------
    gap : str
        Which gap closed, "zero" or "pi".
    where : object
        Momentum (or index) at which the closure was detected.
    """

    def __init__(self, message: str, gap: str = "", where: object = None):
        super().__init__(message)
        self.gap = gap
        self.where = where


class BranchCutHit(FplearnError):
    """An eigenphase of U(k, T) sits on the requested logarithm branch cut."""


class NotConverged(FplearnError):
    """A discretized integral is too far from an allowed quantized value."""


class NotQuantized(NotConverged):
    """A quantity that must be pinned to +-1 (or an integer) is not."""


class NonEquatorialState(FplearnError):
    """State is not pinned to the Bloch equator where a winding is requested."""


class ChiralStructureViolated(FplearnError):
    """Periodized half-period operator lacks the required (off-)diagonal form."""


class SingularPlaquette(FplearnError):
    """A Berry-flux plaquette product has no well-defined phase; refine grid."""


class OpenCurve(FplearnError):
    """Preimage curve reconstruction failed to close into loops."""


class DegenerateTarget(FplearnError):
    """Preimage target point is too close to a sampled field value."""


class LoopsTooClose(FplearnError):
    """Loop families are too close, or wrap the torus, so no linking number."""


class NotSkewSymmetric(FplearnError):
    """Matrix handed to a Pfaffian is not skew-symmetric within tolerance."""


class MethodMismatch(FplearnError):
    """Two independent routes to the same invariant disagree."""


class UnsupportedChern(FplearnError):
    """No reference band construction available for the requested Chern number."""


class AmbiguousSpectrum(FplearnError):
    """Diffusion eigenvalues sit inside the forbidden band around the threshold."""


class GridMismatch(ValidationError):
    """Fields that must share a discretization were built on different grids."""


class ZeroRow(FplearnError):
    """Kernel matrix has an all-zero row; the transition matrix is undefined."""


class DatasetFormatError(FplearnError):
    """Dataset manifest or payload violates the serialization contract."""


class VersionMismatch(DatasetFormatError):
    """Dataset was written under an unsupported format version."""


class IdMismatch(FplearnError):
    """Sample ids disagree between artifacts that must describe one dataset."""


class ConfigError(FplearnError):
    """Run configuration file is missing, malformed, or fails schema checks."""
