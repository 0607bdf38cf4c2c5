"""Synthetic two-view scenes, correspondence noise, and benchmark sweeps.

Points are sampled uniformly in a cube in front of the reference camera,
which sits at the world origin. The target camera pose is drawn by one of
the pose samplers and every point is projected into both views with shared
intrinsics. Seeds are split per sweep point and pair with numpy's
SeedSequence so results do not depend on the execution schedule.
"""
import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from birotation.config import SolverConfig
from birotation.errors import SolverError, VisibilityExhausted
from birotation.evaluation.metrics import rotation_error, translation_error
from birotation.geometry.pose import BasisAxis, CorrespondenceSet, Intrinsics, Pose
from birotation.geometry.so3 import RotationSO3, exp_so3
from birotation.solver.optimizer import PriorPose, solve

logger = logging.getLogger(__name__)

MAX_VISIBILITY_ROUNDS = 100


class PoseKind(str, enum.Enum):
    RANDOM = "random"
    PURE_ROTATION = "pure-rotation"
    BASIS_ALIGNED = "basis-aligned"


class SweepKind(str, enum.Enum):
    NOISE = "noise"
    MISMATCH = "mismatch"


class PoseSampler(BaseModel):
    """How the target camera pose is drawn."""

    model_config = ConfigDict(frozen=True)

    kind: PoseKind = PoseKind.RANDOM
    max_deg: float = Field(default=30.0, ge=0, le=180)
    axis: int = Field(default=1, ge=1, le=3)
    perturb_deg: float = Field(default=0.0, ge=0, le=90)
    sign: int = Field(default=1)
    min_baseline: float = Field(default=0.5, gt=0)
    max_baseline: float = Field(default=2.0, gt=0)


class SceneSpec(BaseModel):
    """Synthetic scene parameters."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    n_points: int = Field(default=200, ge=8)
    cube_center: Tuple[float, float, float] = (0.0, 0.0, 6.0)
    cube_half_extent: float = Field(default=2.0, gt=0)
    intrinsics: Intrinsics = Intrinsics(fx=600.0, fy=600.0, u0=320.0, v0=320.0)
    image_size: Optional[Tuple[int, int]] = None
    pose: PoseSampler = PoseSampler()
    seed: int = Field(default=0, ge=0)


class NoiseSpec(BaseModel):
    """Pixel noise on inliers and the fraction of corrupted matches."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    sigma_px: float = Field(default=0.0, ge=0)
    mismatch_rate: float = Field(default=0.0, ge=0, le=0.3)
    outlier_sigma_px: float = Field(default=10.0, ge=0)


@dataclass(frozen=True)
class LabeledPair:
    """Correspondences with their ground-truth pose and inlier labels."""
    correspondences: CorrespondenceSet
    truth: Pose
    inlier_labels: NDArray[np.bool_]

    @property
    def truth_rotation(self) -> RotationSO3:
        return self.truth.rotation

    @property
    def truth_translation(self) -> NDArray[np.float64]:
        return self.truth.translation


@dataclass(frozen=True)
class SweepRecord:
    value: float
    mean_eps_r: float
    mean_eps_t: float
    failures: int
    pairs: int


def derive_seed(seed: int, *key: int) -> int:
    """Independent 64-bit seed for the stream identified by key."""
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _unit(rng: np.random.Generator) -> NDArray[np.float64]:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _random_rotation(rng: np.random.Generator, max_deg: float) -> RotationSO3:
    axis = _unit(rng)
    angle = np.radians(rng.uniform(0.0, max_deg))
    return exp_so3(axis * angle)


def _tilt(direction: NDArray, rng: np.random.Generator, deg: float) -> NDArray:
    """Rotate a unit direction by deg about a random perpendicular axis."""
    if deg == 0:
        return direction
    axis = np.cross(direction, _unit(rng))
    axis = axis / np.linalg.norm(axis)
    return exp_so3(axis * np.radians(deg)) @ direction


def sample_pose(sampler: PoseSampler, rng: np.random.Generator) -> Pose:
    if sampler.kind is PoseKind.PURE_ROTATION:
        return Pose(_random_rotation(rng, sampler.max_deg), np.zeros(3))

    baseline = rng.uniform(sampler.min_baseline, sampler.max_baseline)
    if sampler.kind is PoseKind.BASIS_ALIGNED:
        if sampler.perturb_deg == 0:
            return Pose(RotationSO3.identity(), -sampler.sign * BasisAxis(sampler.axis).direction * baseline)
        rotation = exp_so3(_unit(rng) * np.radians(sampler.perturb_deg))
        direction = _tilt(-sampler.sign * BasisAxis(sampler.axis).direction, rng, sampler.perturb_deg)
        return Pose(rotation, direction * baseline)

    rotation = _random_rotation(rng, sampler.max_deg)
    return Pose(rotation, _unit(rng) * baseline)


def _sample_points(spec: SceneSpec, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
    center = np.asarray(spec.cube_center)
    return center + rng.uniform(-spec.cube_half_extent, spec.cube_half_extent, size=(n, 3))


def _visible(points: NDArray, spec: SceneSpec) -> NDArray[np.bool_]:
    ok = points[:, 2] > 0
    if spec.image_size is not None:
        width, height = spec.image_size
        safe = np.where(ok[:, None], points, 1.0)
        px = spec.intrinsics.project(safe)
        ok &= (px[:, 0] >= 0) & (px[:, 0] < width) & (px[:, 1] >= 0) & (px[:, 1] < height)
    return ok


def generate_scene(spec: SceneSpec) -> LabeledPair:
    """Noise-free correspondences of cube points seen by both cameras."""
    rng = np.random.default_rng(spec.seed)
    truth = sample_pose(spec.pose, rng)
    points = _sample_points(spec, rng, spec.n_points)

    for _ in range(MAX_VISIBILITY_ROUNDS):
        second = points @ truth.rotation.matrix.T + truth.translation
        visible = _visible(points, spec) & _visible(second, spec)
        if np.all(visible):
            break
        hidden = int(np.count_nonzero(~visible))
        points[~visible] = _sample_points(spec, rng, hidden)
    else:
        raise VisibilityExhausted(
            f"points not visible in both views after {MAX_VISIBILITY_ROUNDS} resampling rounds"
        )

    k = spec.intrinsics
    correspondences = CorrespondenceSet.from_pixels(k.project(points), k.project(second), k, k)
    return LabeledPair(correspondences, truth, np.ones(spec.n_points, dtype=bool))


def apply_noise(pair: LabeledPair, noise: NoiseSpec, seed: int) -> LabeledPair:
    """Gaussian pixel noise in both views; a fraction of matches get the outlier sigma."""
    n = len(pair.correspondences)
    n_out = math.ceil(noise.mismatch_rate * n - 1e-9)
    if noise.sigma_px == 0 and n_out == 0:
        return pair

    rng = np.random.default_rng(seed)
    outliers = np.zeros(n, dtype=bool)
    if n_out:
        outliers[rng.choice(n, size=n_out, replace=False)] = True
    sigma = np.where(outliers, noise.outlier_sigma_px, noise.sigma_px)[:, None]

    c = pair.correspondences
    px1 = c.pixels1 + rng.normal(size=(n, 2)) * sigma
    px2 = c.pixels2 + rng.normal(size=(n, 2)) * sigma
    noisy = CorrespondenceSet.from_pixels(px1, px2, c.intrinsics1, c.intrinsics2)
    return replace(pair, correspondences=noisy, inlier_labels=pair.inlier_labels & ~outliers)


def perturbed_prior(truth: Pose, deg: float, rng: np.random.Generator) -> PriorPose:
    """Prior within deg degrees of the truth in rotation and translation direction."""
    rotation = _random_rotation(rng, deg) @ truth.rotation
    t = np.asarray(truth.translation, dtype=np.float64)
    norm = np.linalg.norm(t)
    if norm == 0:
        return PriorPose(rotation, np.zeros(3))
    direction = _tilt(t / norm, rng, rng.uniform(0.0, deg))
    return PriorPose(rotation, direction * norm)


def noise_grid() -> List[float]:
    return make_grid(0.0, 2.0, 0.02)


def mismatch_grid() -> List[float]:
    return make_grid(0.0, 0.3, 0.01)


def make_grid(start: float, stop: float, step: float) -> List[float]:
    if step <= 0 or stop < start:
        raise ValueError(f"invalid grid {start}:{stop}:{step}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


def _run_pair(task) -> Tuple[Optional[float], Optional[float]]:
    scene, noise, cfg, prior_deg, seed, point, pair = task
    spec = scene.model_copy(update={"seed": derive_seed(seed, point, pair, 0)})
    try:
        labeled = apply_noise(generate_scene(spec), noise, derive_seed(seed, point, pair, 1))
        prior = perturbed_prior(labeled.truth, prior_deg,
                                np.random.default_rng(derive_seed(seed, point, pair, 2)))
        estimate = solve(labeled.correspondences, prior, cfg)
    except (SolverError, VisibilityExhausted) as exc:
        logger.debug(f"Sweep point {point} pair {pair} failed: {exc}")
        return None, None
    return (rotation_error(estimate.rotation, labeled.truth_rotation),
            translation_error(estimate.translation, labeled.truth_translation))


def sweep(kind: SweepKind, base: SceneSpec, cfg: SolverConfig,
          grid: Optional[Sequence[float]] = None, pairs: int = 100,
          noise: Optional[NoiseSpec] = None, prior_deg: float = 5.0,
          seed: int = 0, workers: int = 1) -> List[SweepRecord]:
    """Solve `pairs` independent scenes per grid value and average their errors.

    A noise sweep varies the inlier pixel sigma with no mismatches; a
    mismatch sweep varies the mismatch rate at the given inlier sigma.
    Solver failures are counted, not raised.
    """
    kind = SweepKind(kind)
    noise = noise or NoiseSpec(sigma_px=0.1 if kind is SweepKind.MISMATCH else 0.0)
    if grid is None:
        grid = noise_grid() if kind is SweepKind.NOISE else mismatch_grid()
    grid = sorted(grid)

    tasks = []
    for point, value in enumerate(grid):
        if kind is SweepKind.NOISE:
            spec = NoiseSpec(sigma_px=value, mismatch_rate=0.0, outlier_sigma_px=noise.outlier_sigma_px)
        else:
            spec = NoiseSpec(sigma_px=noise.sigma_px, mismatch_rate=value,
                             outlier_sigma_px=noise.outlier_sigma_px)
        tasks.extend((base, spec, cfg, prior_deg, seed, point, pair) for pair in range(pairs))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_pair, tasks, chunksize=max(1, pairs // 4)))
    else:
        outcomes = [_run_pair(task) for task in tasks]

    records = []
    for point, value in enumerate(grid):
        chunk = outcomes[point * pairs:(point + 1) * pairs]
        ok = [o for o in chunk if o[0] is not None]
        records.append(SweepRecord(
            value=float(value),
            mean_eps_r=float(np.mean([o[0] for o in ok])) if ok else math.nan,
            mean_eps_t=float(np.mean([o[1] for o in ok])) if ok else math.nan,
            failures=len(chunk) - len(ok),
            pairs=len(chunk),
        ))
        logger.info(f"Sweep {kind.value}={value:g}: mean eps_r={records[-1].mean_eps_r:.4g} deg")
    return records
