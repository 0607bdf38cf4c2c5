"""Pose accuracy metrics: angular errors, pose AUC and mean absolute component errors."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from numpy.typing import ArrayLike

from birotation.errors import InputError, LengthMismatch
from birotation.geometry.so3 import RotationSO3, Vec3, log_so3

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = (1.0, 3.0, 5.0, 10.0)


@dataclass(frozen=True)
class PoseError:
    """Rotation and translation errors of one estimate, in degrees."""
    eps_r: float
    eps_t: float

    @property
    def pose_error(self) -> float:
        return max(self.eps_r, self.eps_t)


@dataclass(frozen=True)
class ErrorSummary:
    delta_theta_bar: Vec3
    delta_t_bar: Vec3
    auc: Dict[float, float]
    errors: List[PoseError] = field(default_factory=list)


def rotation_error(r_hat: RotationSO3, r_star: RotationSO3) -> float:
    """Geodesic angle between two rotations, in degrees."""
    cos = (np.trace(r_star.matrix.T @ r_hat.matrix) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))


def translation_error(t_hat: ArrayLike, t_star: ArrayLike) -> float:
    """Sign-folded angle between translation directions, in degrees.

    Both zero gives 0; exactly one zero gives 180.
    """
    a = np.asarray(t_hat, dtype=np.float64)
    b = np.asarray(t_star, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return 180.0
    cos = abs(float(np.dot(a, b) / (na * nb)))
    return float(np.degrees(np.arccos(min(cos, 1.0))))


def auc(errors: Sequence[float], thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> Dict[float, float]:
    """Area under the empirical CDF of errors up to each threshold, in percent.

    The CDF is piecewise constant, so each sample contributes its headroom
    max(0, threshold - error) exactly.
    """
    values = np.asarray(errors, dtype=np.float64)
    if values.size == 0:
        raise InputError("AUC needs at least one error value")
    result = {}
    for threshold in thresholds:
        if threshold <= 0:
            raise InputError(f"AUC thresholds must be positive, got {threshold}")
        headroom = np.clip(threshold - values, 0.0, None)
        result[float(threshold)] = float(np.mean(headroom) / threshold * 100.0)
    return result


def _closest_rotation_vector(theta_hat: Vec3, theta_star: Vec3) -> Vec3:
    """theta_hat or its equivalent vector through the antipode, whichever is closer to theta_star."""
    angle = np.linalg.norm(theta_hat)
    if angle == 0:
        return theta_hat
    alternative = theta_hat - 2.0 * np.pi * theta_hat / angle
    if np.linalg.norm(alternative - theta_star) < np.linalg.norm(theta_hat - theta_star):
        return alternative
    return theta_hat


def error_summary(estimates: Sequence, truths: Sequence,
                  thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> ErrorSummary:
    """Mean absolute rotation-vector and translation errors plus pose AUC.

    Estimated unit directions are scaled to the ground-truth baseline length
    before differencing. When every ground-truth translation is zero the AUC
    uses the rotation error alone.
    """
    if len(estimates) != len(truths):
        raise LengthMismatch(f"{len(estimates)} estimates but {len(truths)} ground-truth poses")
    if not estimates:
        raise InputError("error summary needs at least one pair")

    d_theta = np.zeros(3)
    d_t = np.zeros(3)
    errors = []
    for est, truth in zip(estimates, truths):
        theta_star = log_so3(truth.rotation)
        theta_hat = _closest_rotation_vector(log_so3(est.rotation), theta_star)
        d_theta += np.abs(theta_hat - theta_star)

        t_star = np.asarray(truth.translation, dtype=np.float64)
        t_hat = np.asarray(est.translation, dtype=np.float64)
        norm_hat = np.linalg.norm(t_hat)
        scaled = t_hat / norm_hat * np.linalg.norm(t_star) if norm_hat > 0 else t_hat
        d_t += np.abs(scaled - t_star)

        errors.append(PoseError(eps_r=rotation_error(est.rotation, truth.rotation),
                                eps_t=translation_error(t_hat, t_star)))

    m = len(estimates)
    rotation_only = all(not np.any(t.translation) for t in truths)
    sample = [e.eps_r if rotation_only else e.pose_error for e in errors]
    return ErrorSummary(delta_theta_bar=d_theta / m, delta_t_bar=d_t / m,
                        auc=auc(sample, thresholds), errors=errors)
