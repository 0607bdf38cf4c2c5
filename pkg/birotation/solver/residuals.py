"""Angular residuals, their left-perturbation Jacobians, and the regularized energy."""
import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from birotation.errors import DegenerateBearing
from birotation.geometry.pose import BasisAxis, CorrespondenceSet
from birotation.geometry.so3 import RotationSO3, log_so3

logger = logging.getLogger(__name__)

# The birotation model index shares the basis-axis numbering.
ModelIndex = BasisAxis

# Both angle components of a rotated bearing below this magnitude: angle undefined.
COMPONENT_FLOOR = 1e-12
# Floor on the squared denominator used by the solver and the Jacobian.
DEGENERACY_FLOOR = 1e-12

InlierMask = NDArray[np.float64]


@dataclass(frozen=True)
class ResidualVector:
    """Per-correspondence angular residuals of one model, in (-pi, pi]."""
    e: NDArray[np.float64]
    model: ModelIndex

    def __len__(self) -> int:
        return int(self.e.shape[0])


@dataclass(frozen=True)
class JacobianBlock:
    """Derivatives of each residual w.r.t. left perturbations of R1 and R2."""
    d_theta1: NDArray[np.float64]
    d_theta2: NDArray[np.float64]
    model: ModelIndex

    @property
    def matrix(self) -> NDArray[np.float64]:
        """N x 6 matrix, one row per correspondence."""
        return np.hstack([self.d_theta1, self.d_theta2])


def wrap_angle(x: ArrayLike) -> NDArray[np.float64]:
    """Wrap angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=np.float64), 2.0 * np.pi)


def _rotate(rotation: RotationSO3, bars: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(bars, dtype=np.float64).reshape(-1, 3) @ rotation.matrix.T


def _angles(model: ModelIndex, rotated: NDArray) -> Tuple[NDArray, NDArray, NDArray]:
    j, k = ModelIndex(model).rows
    num = rotated[:, j]
    den = rotated[:, k]
    return np.arctan2(num, den), num, den


def evaluate_residuals(model: ModelIndex, r1: RotationSO3, r2: RotationSO3,
                       correspondences: CorrespondenceSet) -> Tuple[NDArray, NDArray]:
    """Residuals plus a validity mask; degenerate entries are reported as 0 and invalid."""
    p1 = _rotate(r1, correspondences.bars1)
    p2 = _rotate(r2, correspondences.bars2)
    a1, n1, d1 = _angles(model, p1)
    a2, n2, d2 = _angles(model, p2)
    valid = (n1 * n1 + d1 * d1 >= DEGENERACY_FLOOR) & (n2 * n2 + d2 * d2 >= DEGENERACY_FLOOR)
    e = np.where(valid, wrap_angle(a1 - a2), 0.0)
    return e, valid


def residual(model: ModelIndex, r1: RotationSO3, r2: RotationSO3,
             bar1: ArrayLike, bar2: ArrayLike) -> float:
    """Angle difference of one correspondence under the model's rotated frames."""
    p1 = _rotate(r1, bar1)
    p2 = _rotate(r2, bar2)
    a1, n1, d1 = _angles(model, p1)
    a2, n2, d2 = _angles(model, p2)
    for n, d in ((n1, d1), (n2, d2)):
        if abs(n[0]) < COMPONENT_FLOOR and abs(d[0]) < COMPONENT_FLOOR:
            raise DegenerateBearing(f"bearing lies on the axis of model {int(model)}")
    return float(wrap_angle(a1 - a2)[0])


def residual_vector(model: ModelIndex, r1: RotationSO3, r2: RotationSO3,
                    correspondences: CorrespondenceSet) -> ResidualVector:
    model = ModelIndex(model)
    p1 = _rotate(r1, correspondences.bars1)
    p2 = _rotate(r2, correspondences.bars2)
    a1, n1, d1 = _angles(model, p1)
    a2, n2, d2 = _angles(model, p2)
    bad = ((np.abs(n1) < COMPONENT_FLOOR) & (np.abs(d1) < COMPONENT_FLOOR)) | \
          ((np.abs(n2) < COMPONENT_FLOOR) & (np.abs(d2) < COMPONENT_FLOOR))
    if np.any(bad):
        index = int(np.flatnonzero(bad)[0])
        raise DegenerateBearing(f"correspondence {index} lies on the axis of model {int(model)}",
                                index=index)
    return ResidualVector(e=wrap_angle(a1 - a2), model=model)


def _angle_gradient(model: ModelIndex, p: NDArray) -> Tuple[NDArray, NDArray]:
    """Gradient of the model angle of rotated points p under exp([d]x) p, and its denominator."""
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    ones = np.ones_like(x)
    if model is ModelIndex.X:
        den = y * y + z * z
        safe = np.where(den >= DEGENERACY_FLOOR, den, 1.0)
        grad = np.stack([-ones, x * y / safe, x * z / safe], axis=1)
    elif model is ModelIndex.Y:
        den = x * x + z * z
        safe = np.where(den >= DEGENERACY_FLOOR, den, 1.0)
        grad = np.stack([-x * y / safe, ones, -y * z / safe], axis=1)
    else:
        den = x * x + y * y
        safe = np.where(den >= DEGENERACY_FLOOR, den, 1.0)
        grad = np.stack([x * z / safe, y * z / safe, -ones], axis=1)
    return grad, den


def jacobian_rows(model: ModelIndex, r1: RotationSO3, r2: RotationSO3,
                  correspondences: CorrespondenceSet) -> Tuple[NDArray, NDArray]:
    """N x 6 Jacobian and validity mask; degenerate rows are zeroed."""
    model = ModelIndex(model)
    g1, den1 = _angle_gradient(model, _rotate(r1, correspondences.bars1))
    g2, den2 = _angle_gradient(model, _rotate(r2, correspondences.bars2))
    valid = (den1 >= DEGENERACY_FLOOR) & (den2 >= DEGENERACY_FLOOR)
    jac = np.hstack([g1, -g2])
    jac[~valid] = 0.0
    return jac, valid


def jacobian(model: ModelIndex, r1: RotationSO3, r2: RotationSO3,
             correspondences: CorrespondenceSet) -> JacobianBlock:
    model = ModelIndex(model)
    jac, valid = jacobian_rows(model, r1, r2, correspondences)
    if not np.all(valid):
        index = int(np.flatnonzero(~valid)[0])
        raise DegenerateBearing(f"correspondence {index} lies on the axis of model {int(model)}",
                                index=index)
    return JacobianBlock(d_theta1=jac[:, :3], d_theta2=jac[:, 3:], model=model)


def discretized_metric(e: Union[ResidualVector, ArrayLike], mask: ArrayLike) -> float:
    """Sum of squared residuals over the inliers."""
    values = e.e if isinstance(e, ResidualVector) else np.asarray(e, dtype=np.float64)
    weights = np.asarray(mask, dtype=np.float64)
    if values.shape != weights.shape:
        raise ValueError(f"residuals ({values.shape[0]}) and mask ({weights.shape[0]}) differ in length")
    return float(np.sum(weights * values * values))


def regularizer(r1: RotationSO3, r2: RotationSO3) -> float:
    """Squared norms of the two rotation vectors."""
    return float(np.sum(log_so3(r1) ** 2) + np.sum(log_so3(r2) ** 2))


def energy(e: Union[ResidualVector, ArrayLike], mask: ArrayLike, r1: RotationSO3,
           r2: RotationSO3, alpha: float) -> float:
    """Weighted residual metric plus alpha times the rotation-vector regularizer."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return discretized_metric(e, mask) + alpha * regularizer(r1, r2)
