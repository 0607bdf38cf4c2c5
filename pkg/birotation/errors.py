"""Error classes raised across the birotation package."""
from typing import Optional


class BirotationError(Exception):
    """Base class for every error raised by this package."""
    pass


class InputError(BirotationError):
    """Raised for malformed files, flags or values supplied by the caller."""
    pass


class InvalidRotation(InputError):
    """Raised when a matrix is too far from SO(3) to be repaired."""
    pass


class LengthMismatch(InputError):
    """Raised when paired sequences (estimates vs truths) differ in length."""
    pass


class SolverError(BirotationError):
    """Base class for numerical failures during estimation."""
    pass


class DegenerateBearing(SolverError):
    """Raised when a rotated bearing lies on the model's rotation axis."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class DegenerateInit(SolverError):
    """Raised when a prior translation is parallel to a model's reference axis."""
    pass


class TooFewInliers(SolverError):
    """Raised when fewer correspondences survive weighting than the 6-dof step needs."""
    pass


class SingularSystem(SolverError):
    """Raised when the damped normal equations cannot be factorized."""
    pass


class IndeterminateSign(SolverError):
    """Raised when neither the sign vote nor the depth check decides the translation sign."""
    pass


class AmbiguousCheirality(SolverError):
    """Raised when distinct pose candidates tie on positive-depth votes."""
    pass


class VisibilityExhausted(BirotationError):
    """Raised when scene points cannot be made visible in both views."""
    pass
