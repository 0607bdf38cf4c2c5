"""Rotation-group algebra on SO(3): skew operator, exponential and logarithmic maps."""
import logging
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import polar

from birotation.errors import InvalidRotation

logger = logging.getLogger(__name__)

Vec3 = NDArray[np.float64]
Mat3 = NDArray[np.float64]

# Below this angle exp/log switch to Taylor expansions.
SMALL_ANGLE = 1e-6
# Orthonormality and determinant tolerance for a valid rotation.
ROTATION_TOL = 1e-9


def as_vec3(v: ArrayLike) -> Vec3:
    """Coerce to a finite float64 3-vector."""
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected 3 components, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector components must be finite")
    return arr


def skew(v: ArrayLike) -> Mat3:
    """Cross-product matrix: skew(v) @ w == np.cross(v, w)."""
    x, y, z = as_vec3(v)
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def vee(m: Mat3) -> Vec3:
    """Inverse of skew for the antisymmetric part of m (unscaled)."""
    return np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]]) / 2.0


def rotation_error_max(m: Mat3) -> float:
    """Largest deviation of m from orthonormality or unit determinant."""
    m = np.asarray(m, dtype=np.float64)
    ortho = np.max(np.abs(m.T @ m - np.eye(3)))
    return float(max(ortho, abs(np.linalg.det(m) - 1.0)))


def is_rotation(m: ArrayLike, tol: float = ROTATION_TOL) -> bool:
    """True when m is a finite 3x3 matrix in SO(3) within tol per entry."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    return rotation_error_max(m) <= tol


def nearest_rotation(m: ArrayLike) -> Mat3:
    """Project a 3x3 matrix onto SO(3) via the polar decomposition."""
    u, _ = polar(np.asarray(m, dtype=np.float64))
    if np.linalg.det(u) < 0:
        raise InvalidRotation("matrix has negative determinant; no proper rotation nearby")
    return u


class RotationSO3:
    """An immutable element of SO(3)."""

    __slots__ = ("_m",)

    def __init__(self, m: ArrayLike, tol: float = ROTATION_TOL):
        arr = np.array(m, dtype=np.float64)
        if arr.shape == (9,):
            arr = arr.reshape(3, 3)
        if arr.shape != (3, 3) or not np.all(np.isfinite(arr)):
            raise InvalidRotation("rotation must be a finite 3x3 matrix")
        err = rotation_error_max(arr)
        if err > tol:
            raise InvalidRotation(f"matrix is not a rotation (deviation {err:.3g} > {tol:g})")
        arr.setflags(write=False)
        self._m = arr

    @classmethod
    def identity(cls) -> "RotationSO3":
        return cls(np.eye(3))

    @classmethod
    def from_matrix(cls, m: ArrayLike, repair_tol: float = ROTATION_TOL) -> "RotationSO3":
        """Accept m if valid; re-orthonormalize it when the deviation is within repair_tol."""
        arr = np.asarray(m, dtype=np.float64).reshape(3, 3)
        if is_rotation(arr):
            return cls(arr)
        if np.all(np.isfinite(arr)) and rotation_error_max(arr) <= repair_tol:
            return cls(nearest_rotation(arr))
        raise InvalidRotation(f"matrix deviates from SO(3) by {rotation_error_max(arr):.3g}")

    @classmethod
    def about_axis(cls, index: int, angle: float) -> "RotationSO3":
        """Rotation by angle about coordinate axis index (1=X, 2=Y, 3=Z)."""
        theta = np.zeros(3)
        theta[index - 1] = angle
        return exp_so3(theta)

    @property
    def matrix(self) -> Mat3:
        return self._m

    @property
    def T(self) -> "RotationSO3":
        return RotationSO3(self._m.T)

    def inverse(self) -> "RotationSO3":
        return self.T

    def row(self, i: int) -> Vec3:
        """Row i (1-based) of the matrix."""
        return self._m[i - 1].copy()

    def __matmul__(self, other: Union["RotationSO3", np.ndarray]):
        if isinstance(other, RotationSO3):
            prod = self._m @ other.matrix
            if rotation_error_max(prod) > ROTATION_TOL:
                prod = nearest_rotation(prod)
            return RotationSO3(prod)
        return self._m @ np.asarray(other, dtype=np.float64)

    def __array__(self, dtype=None, copy=None):
        return np.array(self._m, dtype=dtype)

    def __repr__(self) -> str:
        rows = ", ".join("[" + ", ".join(f"{v:.6g}" for v in r) + "]" for r in self._m)
        return f"RotationSO3([{rows}])"


def exp_so3(theta: ArrayLike) -> RotationSO3:
    """Rodrigues formula; the zero vector maps to the identity exactly."""
    theta = as_vec3(theta)
    angle = float(np.linalg.norm(theta))
    if angle == 0.0:
        return RotationSO3(np.eye(3))
    k = skew(theta)
    if angle < SMALL_ANGLE:
        a = 1.0 - angle * angle / 6.0
        b = 0.5 - angle * angle / 24.0
    else:
        a = np.sin(angle) / angle
        b = 2.0 * np.sin(angle / 2.0) ** 2 / (angle * angle)
    m = np.eye(3) + a * k + b * (k @ k)
    if rotation_error_max(m) > ROTATION_TOL:
        m = nearest_rotation(m)
    return RotationSO3(m)


def log_so3(rotation: Union[RotationSO3, ArrayLike]) -> Vec3:
    """Rotation vector theta with exp_so3(theta) == R and |theta| in [0, pi]."""
    m = rotation.matrix if isinstance(rotation, RotationSO3) else np.asarray(rotation, dtype=np.float64)
    w = vee(m)
    s = float(np.linalg.norm(w))
    c = (np.trace(m) - 1.0) / 2.0
    angle = float(np.arctan2(s, c))

    if s < SMALL_ANGLE:
        if c > 0:
            # theta ~ w * (1 + angle^2 / 6)
            return w * (1.0 + s * s / 6.0)
        # Angle near pi: the symmetric part carries the axis.
        sym = (m + m.T) / 2.0
        outer = (sym - c * np.eye(3)) / (1.0 - c)
        col = int(np.argmax(np.diag(outer)))
        axis = outer[:, col] / np.sqrt(outer[col, col])
        if s > 0 and np.dot(axis, w) < 0:
            axis = -axis
        return angle * axis
    return angle * w / s
