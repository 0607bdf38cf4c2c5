"""Correspondence types, basis axes and pose recovery from birotation solutions."""
import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from birotation.errors import AmbiguousCheirality, InputError
from birotation.geometry.so3 import Mat3, RotationSO3, Vec3, as_vec3, log_so3

logger = logging.getLogger(__name__)

# Rays closer to parallel than this (sine of the angle) cast no depth vote.
PARALLEL_RAYS = 1e-9
# Candidates closer than this in rotation angle and direction count as one pose.
SAME_POSE_TOL = 1e-6


class Intrinsics(BaseModel):
    """Pinhole intrinsics with zero skew and no distortion."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    fx: float = Field(..., gt=0)
    fy: float = Field(..., gt=0)
    u0: float
    v0: float

    @property
    def matrix(self) -> Mat3:
        return np.array([
            [self.fx, 0.0, self.u0],
            [0.0, self.fy, self.v0],
            [0.0, 0.0, 1.0],
        ])

    def project(self, bars: ArrayLike) -> NDArray[np.float64]:
        """Pixels of depth-normalized coordinates (N x 3 or 3,)."""
        bars = np.asarray(bars, dtype=np.float64)
        u = self.fx * bars[..., 0] / bars[..., 2] + self.u0
        v = self.fy * bars[..., 1] / bars[..., 2] + self.v0
        return np.stack([u, v], axis=-1)


def normalize(pixels: ArrayLike, intrinsics: Intrinsics) -> NDArray[np.float64]:
    """Depth-normalized coordinates ((u-u0)/fx, (v-v0)/fy, 1) of pixels (N x 2 or 2,)."""
    px = np.asarray(pixels, dtype=np.float64)
    x = (px[..., 0] - intrinsics.u0) / intrinsics.fx
    y = (px[..., 1] - intrinsics.v0) / intrinsics.fy
    return np.stack([x, y, np.ones_like(x)], axis=-1)


class BasisAxis(enum.IntEnum):
    """Axis of a basis transformation; also indexes the birotation model."""
    X = 1
    Y = 2
    Z = 3

    @property
    def direction(self) -> Vec3:
        d = np.zeros(3)
        d[self.value - 1] = 1.0
        return d

    @property
    def rows(self) -> Tuple[int, int]:
        """Zero-based (j, k) rows whose ratio defines the model's angle."""
        return {1: (1, 2), 2: (0, 2), 3: (0, 1)}[self.value]

    @property
    def reference(self) -> "BasisAxis":
        """Axis crossed with the translation when building the initial R2."""
        return {1: BasisAxis.Z, 2: BasisAxis.X, 3: BasisAxis.Y}[self.value]


@dataclass(frozen=True)
class Correspondence:
    """One pixel match and its depth-normalized coordinates."""
    p1: NDArray[np.float64]
    p2: NDArray[np.float64]
    bar1: Vec3
    bar2: Vec3

    def __post_init__(self):
        if self.bar1[2] != 1.0 or self.bar2[2] != 1.0:
            raise InputError("normalized coordinates must have unit third component")


@dataclass(frozen=True)
class CorrespondenceSet:
    """N matches between the reference and target views."""
    intrinsics1: Intrinsics
    intrinsics2: Intrinsics
    pixels1: NDArray[np.float64]
    pixels2: NDArray[np.float64]
    bars1: NDArray[np.float64]
    bars2: NDArray[np.float64]

    def __post_init__(self):
        n = self.bars1.shape[0]
        if n < 1:
            raise InputError("a correspondence set needs at least one match")
        for name in ("pixels1", "pixels2", "bars1", "bars2"):
            arr = getattr(self, name)
            if arr.shape[0] != n:
                raise InputError(f"{name} has {arr.shape[0]} rows, expected {n}")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} contains non-finite values")
            arr.setflags(write=False)

    @classmethod
    def from_pixels(cls, pixels1: ArrayLike, pixels2: ArrayLike,
                    intrinsics1: Intrinsics, intrinsics2: Intrinsics) -> "CorrespondenceSet":
        px1 = np.array(pixels1, dtype=np.float64).reshape(-1, 2)
        px2 = np.array(pixels2, dtype=np.float64).reshape(-1, 2)
        return cls(intrinsics1, intrinsics2, px1, px2,
                   normalize(px1, intrinsics1), normalize(px2, intrinsics2))

    @classmethod
    def from_bearings(cls, bars1: ArrayLike, bars2: ArrayLike,
                      intrinsics1: Intrinsics, intrinsics2: Intrinsics) -> "CorrespondenceSet":
        """Build from camera-frame directions; each row is divided by its depth."""
        b1 = np.array(bars1, dtype=np.float64).reshape(-1, 3)
        b2 = np.array(bars2, dtype=np.float64).reshape(-1, 3)
        b1 = b1 / b1[:, 2:3]
        b2 = b2 / b2[:, 2:3]
        return cls(intrinsics1, intrinsics2, intrinsics1.project(b1), intrinsics2.project(b2), b1, b2)

    def __len__(self) -> int:
        return int(self.bars1.shape[0])

    def __getitem__(self, n: int) -> Correspondence:
        return Correspondence(self.pixels1[n].copy(), self.pixels2[n].copy(),
                              self.bars1[n].copy(), self.bars2[n].copy())


@dataclass(frozen=True)
class Pose:
    """A relative pose p2 = R p1 + t (translation may carry scale)."""
    rotation: RotationSO3
    translation: Vec3

    def __post_init__(self):
        object.__setattr__(self, "translation", as_vec3(self.translation))


@dataclass(frozen=True)
class ModelReport:
    """Final state summary of one birotation model."""
    axis: BasisAxis
    metric: float
    iterations: int
    termination: str
    init_fallback: bool = False


@dataclass(frozen=True)
class RelativePoseEstimate:
    """Rotation and unit translation direction recovered from a birotation solution."""
    rotation: RotationSO3
    t_dir: Vec3
    axis: BasisAxis
    s_sign: int
    metric: float
    r1: RotationSO3
    r2: RotationSO3
    converged: bool = True
    iterations: int = 0
    sign_resolved: bool = True
    initialization: str = "prior"
    models: Tuple[ModelReport, ...] = field(default_factory=tuple)

    def __post_init__(self):
        norm = float(np.linalg.norm(self.t_dir))
        if not (norm <= 1e-12 or abs(norm - 1.0) <= 1e-12):
            raise ValueError(f"translation direction must be unit or zero, got norm {norm}")
        if self.s_sign not in (1, -1):
            raise ValueError("s_sign must be +1 or -1")
        expected = self.r2.matrix.T @ self.r1.matrix
        if not np.allclose(self.rotation.matrix, expected, rtol=0.0, atol=1e-9):
            raise ValueError("rotation is inconsistent with the stored birotation pair")

    @property
    def translation(self) -> Vec3:
        return self.t_dir

    @property
    def is_pure_rotation(self) -> bool:
        return not np.any(self.t_dir)

    def as_pose(self) -> Pose:
        return Pose(self.rotation, self.t_dir)


def recover_pose(r1: RotationSO3, r2: RotationSO3, axis: BasisAxis, s_sign: int,
                 **extras) -> RelativePoseEstimate:
    """R = R2^T R1 and t = -s * (row i of R2), normalized."""
    axis = BasisAxis(axis)
    rotation = r2.T @ r1
    t = -float(s_sign) * r2.row(axis.value)
    t = t / np.linalg.norm(t)
    extras.setdefault("metric", 0.0)
    return RelativePoseEstimate(rotation=rotation, t_dir=t, axis=axis, s_sign=int(s_sign),
                                r1=r1, r2=r2, **extras)


def pure_rotation_estimate(r1: RotationSO3, r2: RotationSO3, axis: BasisAxis,
                           **extras) -> RelativePoseEstimate:
    """Estimate with zero translation; s_sign is +1 by convention."""
    extras.setdefault("metric", 0.0)
    return RelativePoseEstimate(rotation=r2.T @ r1, t_dir=np.zeros(3), axis=BasisAxis(axis),
                                s_sign=1, r1=r1, r2=r2, **extras)


def essential_from_birotation(r1: RotationSO3, r2: RotationSO3, axis: BasisAxis) -> Mat3:
    """Essential matrix as a difference of outer products of R1/R2 rows.

    Equals skew(row i of R2) @ R2^T @ R1, i.e. [t]x R up to scale.
    """
    a, b = r2.matrix, r1.matrix
    axis = BasisAxis(axis)
    if axis is BasisAxis.X:
        return np.outer(a[2], b[1]) - np.outer(a[1], b[2])
    if axis is BasisAxis.Y:
        return np.outer(a[0], b[2]) - np.outer(a[2], b[0])
    return np.outer(a[1], b[0]) - np.outer(a[0], b[1])


def enumerate_ambiguity(r1: RotationSO3, r2: RotationSO3, axis: BasisAxis,
                        **extras) -> List[RelativePoseEstimate]:
    """The four pose candidates sharing one birotation solution's epipolar geometry.

    Order: (R1, +), (R1, -), (flipped R1, +), (flipped R1, -) where the flip is a
    half-turn about the model axis applied after R1.
    """
    axis = BasisAxis(axis)
    flipped = RotationSO3.about_axis(axis.value, np.pi) @ r1
    candidates = []
    for first in (r1, flipped):
        for sign in (1, -1):
            candidates.append(recover_pose(first, r2, axis, sign, **extras))
    return candidates


def triangulate_midpoint(bars1: ArrayLike, bars2: ArrayLike, rotation: RotationSO3,
                         translation: ArrayLike) -> Tuple[NDArray, NDArray, NDArray]:
    """Midpoint triangulation of normalized rays under p2 = R p1 + t.

    Returns (depth in view 1, depth in view 2, valid) per correspondence;
    near-parallel rays and a zero baseline are marked invalid.
    """
    d1 = np.asarray(bars1, dtype=np.float64).reshape(-1, 3)
    d2 = np.asarray(bars2, dtype=np.float64).reshape(-1, 3) @ rotation.matrix
    t = np.asarray(translation, dtype=np.float64)
    c2 = -(rotation.matrix.T @ t)

    a = np.einsum("ij,ij->i", d1, d1)
    b = np.einsum("ij,ij->i", d1, d2)
    c = np.einsum("ij,ij->i", d2, d2)
    e = d1 @ c2
    f = d2 @ c2
    det = a * c - b * b
    valid = (det > (PARALLEL_RAYS ** 2) * a * c) & (np.linalg.norm(t) > 0)
    safe = np.where(valid, det, 1.0)
    lam1 = (c * e - b * f) / safe
    lam2 = (b * e - a * f) / safe
    points = (lam1[:, None] * d1 + c2[None, :] + lam2[:, None] * d2) / 2.0
    depth1 = points[:, 2]
    depth2 = points @ rotation.matrix[2] + t[2]
    return depth1, depth2, valid


def count_positive_depths(candidate, correspondences: CorrespondenceSet,
                          mask: Optional[NDArray] = None) -> int:
    """Number of correspondences triangulated in front of both cameras."""
    rotation = candidate.rotation
    translation = candidate.translation
    depth1, depth2, valid = triangulate_midpoint(correspondences.bars1, correspondences.bars2,
                                                 rotation, translation)
    ok = valid & (depth1 > 0) & (depth2 > 0)
    if mask is not None:
        ok &= np.asarray(mask, dtype=bool)
    return int(np.count_nonzero(ok))


def _same_pose(a, b) -> bool:
    angle = np.linalg.norm(log_so3(a.rotation.T @ b.rotation))
    return bool(angle <= SAME_POSE_TOL
                and np.linalg.norm(np.asarray(a.translation) - np.asarray(b.translation)) <= SAME_POSE_TOL)


def cheirality_select(candidates: Sequence, correspondences: CorrespondenceSet,
                      mask: Optional[NDArray] = None):
    """Candidate with the most points in front of both cameras.

    Ties go to the lowest index unless the tied candidates are distinct poses,
    which raises AmbiguousCheirality.
    """
    if not candidates:
        raise InputError("cheirality_select needs at least one candidate")
    if len(candidates) == 1:
        return candidates[0]
    votes = [count_positive_depths(c, correspondences, mask) for c in candidates]
    best = max(votes)
    winners = [i for i, v in enumerate(votes) if v == best]
    first = candidates[winners[0]]
    for i in winners[1:]:
        if not _same_pose(first, candidates[i]):
            raise AmbiguousCheirality(
                f"candidates {winners[0]} and {i} tie with {best} positive-depth votes"
            )
    logger.debug(f"Cheirality votes {votes}; selected candidate {winners[0]}")
    return first


def chain_poses(steps: Sequence[Pose], scale: float = 1.0) -> List[Pose]:
    """Camera poses of a trajectory from consecutive relative poses.

    Frame 0 is the identity and T_{k+1} = P_k T_k, with each step's
    translation multiplied by scale.
    """
    frames = [Pose(RotationSO3.identity(), np.zeros(3))]
    for p in steps:
        last = frames[-1]
        rotation = p.rotation @ last.rotation
        translation = p.rotation.matrix @ last.translation + scale * p.translation
        frames.append(Pose(rotation, translation))
    return frames
