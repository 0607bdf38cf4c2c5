"""Simultaneous minimization of the three birotation energies and pose selection.

Each model i starts from a prior pose, is refined with damped Gauss-Newton
steps on SO(3) x SO(3) using left perturbations, and reports its final
weighted residual metric. The model with the smallest beta-weighted metric
wins; the sign of its translation is voted from the rotated correspondences.
"""
import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from birotation.config import OutlierRule, SolverConfig
from birotation.errors import (
    AmbiguousCheirality,
    DegenerateInit,
    IndeterminateSign,
    SingularSystem,
    TooFewInliers,
)
from birotation.geometry.pose import (
    BasisAxis,
    CorrespondenceSet,
    ModelReport,
    RelativePoseEstimate,
    cheirality_select,
    enumerate_ambiguity,
    pure_rotation_estimate,
    recover_pose,
)
from birotation.geometry.so3 import RotationSO3, Vec3, as_vec3, exp_so3
from birotation.solver.residuals import (
    InlierMask,
    ModelIndex,
    discretized_metric,
    evaluate_residuals,
    jacobian_rows,
    regularizer,
)

logger = logging.getLogger(__name__)

# The 6-dof increment needs at least this many weighted rows.
MIN_INLIERS = 6
# Cross products shorter than this mean the prior translation is on the reference axis.
INIT_PARALLEL_TOL = 1e-9
# Reciprocal condition number below which the damped system is treated as singular.
MIN_RCOND = 1e-14
# Further steps allowed once d_hat/N is under the value tolerance.
POLISH_STEPS = 2
# d_hat/N at which polishing stops; residuals are near 1e-12 rad there.
POLISH_FLOOR = 1e-24


class Termination(str, enum.Enum):
    VALUE = "value"
    RATE = "rate"
    MAX_ITERS = "max_iters"
    NOT_RUN = "not_run"


@dataclass(frozen=True)
class PriorPose:
    """Initial relative pose; a zero translation requests per-model axis defaults."""
    rotation: RotationSO3 = field(default_factory=RotationSO3.identity)
    translation: Vec3 = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "translation", as_vec3(self.translation))

    @property
    def has_translation(self) -> bool:
        return bool(np.any(self.translation))


@dataclass(frozen=True)
class BirotationModelState:
    """Current rotations, metric and inlier mask of one birotation model."""
    model: ModelIndex
    r1: RotationSO3
    r2: RotationSO3
    d_hat: float = math.inf
    mask: Optional[InlierMask] = None
    iterations: int = 0
    converged: bool = False
    termination: Termination = Termination.NOT_RUN
    init_fallback: bool = False
    history: Tuple[float, ...] = ()

    def metric(self, n: int) -> float:
        """d_hat / N."""
        return self.d_hat / n

    def energy(self, alpha: float) -> float:
        """d_hat plus alpha times the rotation-vector regularizer."""
        return self.d_hat + alpha * regularizer(self.r1, self.r2)


def _basis_rotation(model: ModelIndex, translation: Vec3) -> RotationSO3:
    """R2 whose row i is -t/|t|, completed with cross products against the reference axis."""
    model = ModelIndex(model)
    rows = [None, None, None]
    i = model.value - 1
    first = -translation / np.linalg.norm(translation)
    second = np.cross(model.reference.direction, first)
    norm = np.linalg.norm(second)
    if norm < INIT_PARALLEL_TOL:
        raise DegenerateInit(f"prior translation is parallel to the reference axis of model {model.value}")
    second = second / norm
    third = np.cross(first, second)
    third = third / np.linalg.norm(third)
    # Rows follow the cyclic order i -> i+1 -> i+2.
    rows[i] = first
    rows[(i + 1) % 3] = second
    rows[(i + 2) % 3] = third
    return RotationSO3.from_matrix(np.vstack(rows), repair_tol=1e-6)


def initialize_models(prior: PriorPose,
                      models: Iterable[int] = (1, 2, 3)) -> List[BirotationModelState]:
    """One state per model with R2 from the prior translation and R1 = R2 R_init."""
    states = []
    for index in models:
        model = ModelIndex(index)
        fallback = False
        if prior.has_translation:
            try:
                r2 = _basis_rotation(model, prior.translation)
            except DegenerateInit as exc:
                logger.warning(f"{exc}; using the default axis initialization")
                r2 = _basis_rotation(model, -model.direction)
                fallback = True
        else:
            r2 = _basis_rotation(model, -model.direction)
        states.append(BirotationModelState(model=model, r1=r2 @ prior.rotation, r2=r2,
                                           init_fallback=fallback))
    return states


def min_inliers(n: int) -> int:
    return max(MIN_INLIERS, math.ceil(n / 4))


def upper_quartile_weights(e: ArrayLike, valid: Optional[ArrayLike] = None) -> InlierMask:
    """Tukey upper-fence mask on |e|, keeping at least max(6, ceil(N/4)) entries.

    Quartiles use linear interpolation between order statistics.
    """
    values = np.abs(np.asarray(getattr(e, "e", e), dtype=np.float64))
    n = values.shape[0]
    if n < 1:
        raise ValueError("weighting needs at least one residual")
    usable = np.ones(n, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)

    mask = np.zeros(n)
    if np.any(usable):
        q1, q3 = np.percentile(values[usable], [25.0, 75.0])
        fence = q3 + 1.5 * (q3 - q1)
        mask[usable & (values <= fence)] = 1.0

    floor = min(min_inliers(n), int(np.count_nonzero(usable)))
    if np.count_nonzero(mask) < floor:
        ranked = np.where(usable, values, np.inf)
        keep = np.argsort(ranked, kind="stable")[:floor]
        mask = np.zeros(n)
        mask[keep] = 1.0
    return mask


def _weights(e: NDArray, valid: NDArray, cfg: SolverConfig) -> InlierMask:
    if cfg.outlier_rule is OutlierRule.NONE:
        return valid.astype(np.float64)
    return upper_quartile_weights(e, valid)


def gauss_newton_increment(jac: ArrayLike, e: ArrayLike, mask: ArrayLike, alpha: float) -> NDArray:
    """Solve (J^T L J + alpha I) d = -J^T L e for the 6-vector increment."""
    jac = np.atleast_2d(np.asarray(jac, dtype=np.float64))
    e = np.asarray(e, dtype=np.float64).reshape(-1)
    weights = np.asarray(mask, dtype=np.float64).reshape(-1)
    weighted = jac * weights[:, None]
    lhs = weighted.T @ jac + alpha * np.eye(jac.shape[1])
    rhs = -(weighted.T @ e)
    try:
        factor = cho_factor(lhs)
    except LinAlgError as exc:
        raise SingularSystem(f"normal equations are not positive definite: {exc}") from exc
    diag = np.diag(factor[0])
    if not np.all(np.isfinite(diag)) or diag.min() ** 2 < MIN_RCOND * diag.max() ** 2:
        raise SingularSystem("normal equations are ill-conditioned")
    return cho_solve(factor, rhs)


def evaluate_state(state: BirotationModelState, correspondences: CorrespondenceSet,
                   cfg: SolverConfig) -> BirotationModelState:
    """Recompute residuals, mask and d_hat at the state's current rotations."""
    e, valid = evaluate_residuals(state.model, state.r1, state.r2, correspondences)
    mask = _weights(e, valid, cfg)
    d_hat = discretized_metric(e, mask)
    return replace(state, d_hat=d_hat, mask=mask)


def step(state: BirotationModelState, correspondences: CorrespondenceSet,
         cfg: SolverConfig) -> BirotationModelState:
    """One damped Gauss-Newton update with left-multiplicative rotation increments."""
    e, valid = evaluate_residuals(state.model, state.r1, state.r2, correspondences)
    mask = _weights(e, valid, cfg)
    inliers = int(np.count_nonzero(mask))
    if inliers < MIN_INLIERS:
        raise TooFewInliers(f"model {state.model.value}: {inliers} usable correspondences, need {MIN_INLIERS}")

    jac, _ = jacobian_rows(state.model, state.r1, state.r2, correspondences)
    delta = gauss_newton_increment(jac, e, mask, cfg.alpha)
    r1 = exp_so3(delta[:3]) @ state.r1
    r2 = exp_so3(delta[3:]) @ state.r2

    updated = evaluate_state(replace(state, r1=r1, r2=r2), correspondences, cfg)
    return replace(updated, iterations=state.iterations + 1,
                   history=state.history + (updated.d_hat,))


def _polish(state: BirotationModelState, correspondences: CorrespondenceSet,
            cfg: SolverConfig, budget: int) -> BirotationModelState:
    """Up to POLISH_STEPS more steps while d_hat/N is above POLISH_FLOOR and still dropping."""
    n = len(correspondences)
    for _ in range(min(POLISH_STEPS, budget)):
        if state.d_hat / n < POLISH_FLOOR:
            break
        previous = state.d_hat
        state = step(state, correspondences, cfg)
        if previous - state.d_hat <= cfg.tol_rate * previous:
            break
    return state


def optimize_model(state: BirotationModelState, correspondences: CorrespondenceSet,
                   cfg: SolverConfig) -> BirotationModelState:
    """Iterate until d_hat/N or its relative change drops below tolerance, or max_iters.

    Reaching the value tolerance is followed by up to POLISH_STEPS more
    steps inside the same iteration cap.
    """
    n = len(correspondences)
    if not math.isfinite(state.d_hat):
        state = evaluate_state(state, correspondences, cfg)
    if not state.history:
        state = replace(state, history=(state.d_hat,))

    termination = Termination.MAX_ITERS
    for k in range(cfg.max_iters):
        previous = state.d_hat
        state = step(state, correspondences, cfg)
        if state.d_hat / n < cfg.tol_value:
            termination = Termination.VALUE
            state = _polish(state, correspondences, cfg, cfg.max_iters - k - 1)
            break
        rate = abs(previous - state.d_hat) / max(previous, np.finfo(float).eps)
        if rate < cfg.tol_rate:
            termination = Termination.RATE
            break

    logger.debug(
        f"Model {state.model.value} stopped on {termination.value} after "
        f"{state.iterations} iterations, d_hat/N={state.d_hat / n:.3e}"
    )
    return replace(state, converged=termination is not Termination.MAX_ITERS,
                   termination=termination)


def select_model(states: Sequence[BirotationModelState], cfg: SolverConfig) -> ModelIndex:
    """argmin over models of beta_i * d_hat_i.

    Models within N * tol_value of the minimum are tied; the tie goes to the
    smallest regularized energy, then to the smallest index.
    """
    weighted = {s.model: cfg.beta[s.model.value - 1] * s.d_hat for s in states}
    best = min(weighted.values())
    tied = [s for s in states
            if weighted[s.model] - best <= _correspondence_count(s) * cfg.tol_value]
    winner = min(tied, key=lambda s: (s.energy(cfg.alpha), s.model.value))
    if len(tied) > 1:
        logger.debug(f"Models {[s.model.value for s in tied]} tied on d_hat; "
                     f"model {winner.model.value} has the smallest energy")
    return winner.model


def _correspondence_count(state: BirotationModelState) -> int:
    return 0 if state.mask is None else int(state.mask.shape[0])


def _sign_margins(state: BirotationModelState, correspondences: CorrespondenceSet) -> Tuple[NDArray, NDArray]:
    """Per-correspondence evidence for s > 0 (positive margin) and the usable mask."""
    p1 = correspondences.bars1 @ state.r1.matrix.T
    p2 = correspondences.bars2 @ state.r2.matrix.T
    front = (p1[:, 2] > 0) & (p2[:, 2] > 0)
    z1 = np.where(front, p1[:, 2], 1.0)
    z2 = np.where(front, p2[:, 2], 1.0)
    model = state.model
    if model is ModelIndex.X:
        margin = p1[:, 0] / z1 - p2[:, 0] / z2
    elif model is ModelIndex.Y:
        margin = p1[:, 1] / z1 - p2[:, 1] / z2
    else:
        # Points recede along +Z by s: their radial image distance shrinks.
        margin = np.hypot(p2[:, 0], p2[:, 1]) / z2 - np.hypot(p1[:, 0], p1[:, 1]) / z1
    usable = front
    if state.mask is not None:
        usable = usable & (state.mask > 0)
    return margin, usable


def _ray_parallax(state: BirotationModelState, correspondences: CorrespondenceSet) -> NDArray:
    """Sine of the angle between the two rotated rays of each correspondence."""
    p1 = correspondences.bars1 @ state.r1.matrix.T
    p2 = correspondences.bars2 @ state.r2.matrix.T
    norms = np.linalg.norm(p1, axis=1) * np.linalg.norm(p2, axis=1)
    return np.linalg.norm(np.cross(p1, p2), axis=1) / norms


def determine_sign(state: BirotationModelState, correspondences: CorrespondenceSet,
                   cfg: Optional[SolverConfig] = None) -> int:
    """Majority vote on the translation sign, falling back to positive-depth counting.

    Margins and ray angles below three times the residual level, never less
    than the level at the value tolerance, count as no parallax. With no
    parallax anywhere both steps tie and IndeterminateSign is raised.
    """
    cfg = cfg or SolverConfig()
    margin, usable = _sign_margins(state, correspondences)
    inliers = int(np.count_nonzero(state.mask)) if state.mask is not None else len(correspondences)
    d_hat = state.d_hat if math.isfinite(state.d_hat) else 0.0
    level = max(d_hat / max(inliers, 1), cfg.tol_value)
    threshold = max(cfg.sign_tol, 3.0 * math.sqrt(level))

    positive = int(np.count_nonzero(usable & (margin > threshold)))
    negative = int(np.count_nonzero(usable & (margin < -threshold)))
    if positive != negative:
        logger.debug(f"Sign vote {positive} vs {negative} for model {state.model.value}")
        return 1 if positive > negative else -1

    candidates = [recover_pose(state.r1, state.r2, state.model, sign) for sign in (1, -1)]
    measurable = _ray_parallax(state, correspondences) > threshold
    if state.mask is not None:
        measurable &= state.mask > 0
    try:
        chosen = cheirality_select(candidates, correspondences, mask=measurable)
    except AmbiguousCheirality as exc:
        raise IndeterminateSign(f"sign vote tied at {positive} and depth check tied: {exc}") from exc
    logger.debug(f"Sign vote tied at {positive}; depth check chose {chosen.s_sign:+d}")
    return chosen.s_sign


def _report(state: BirotationModelState, n: int) -> ModelReport:
    return ModelReport(axis=BasisAxis(state.model.value), metric=state.d_hat / n,
                       iterations=state.iterations, termination=state.termination.value,
                       init_fallback=state.init_fallback)


def optimize_all(correspondences: CorrespondenceSet, prior: PriorPose,
                 cfg: SolverConfig) -> Dict[ModelIndex, BirotationModelState]:
    """Initialize and optimize every active model independently."""
    states = initialize_models(prior, cfg.models)
    return {s.model: optimize_model(s, correspondences, cfg) for s in states}


def solve(correspondences: CorrespondenceSet, prior: Optional[PriorPose] = None,
          cfg: Optional[SolverConfig] = None) -> RelativePoseEstimate:
    """Estimate the relative pose of two calibrated views."""
    cfg = cfg or SolverConfig()
    prior = prior or PriorPose()
    n = len(correspondences)
    if n < MIN_INLIERS:
        raise TooFewInliers(f"{n} correspondences supplied, need at least {MIN_INLIERS}")

    optimized = optimize_all(correspondences, prior, cfg)
    axis = select_model(list(optimized.values()), cfg)
    chosen = optimized[axis]
    logger.info(
        f"Selected model {axis.value} with beta-weighted d_hat/N "
        f"{cfg.beta[axis.value - 1] * chosen.d_hat / n:.3e}"
    )

    extras = dict(
        metric=cfg.beta[axis.value - 1] * chosen.d_hat / n,
        converged=chosen.converged,
        iterations=chosen.iterations,
        initialization="prior" if prior.has_translation else "axis-default",
        models=tuple(_report(s, n) for s in optimized.values()),
    )

    try:
        sign = determine_sign(chosen, correspondences, cfg)
    except IndeterminateSign:
        if all(s.d_hat / n < cfg.tol_value for s in optimized.values()):
            logger.info("No measurable parallax; returning a pure rotation")
            return pure_rotation_estimate(chosen.r1, chosen.r2, axis, **extras)
        logger.warning("Translation sign is indeterminate; defaulting to +1")
        return recover_pose(chosen.r1, chosen.r2, axis, 1, sign_resolved=False, **extras)

    estimate = recover_pose(chosen.r1, chosen.r2, axis, sign, **extras)
    if cfg.disambiguate:
        candidates = enumerate_ambiguity(chosen.r1, chosen.r2, axis, **extras)
        estimate = cheirality_select(candidates, correspondences, mask=chosen.mask)
    return estimate
