"""Tests for the birotation solver."""
import math

import numpy as np
import pytest

from birotation.config import OutlierRule, SolverConfig
from birotation.errors import IndeterminateSign, SingularSystem, TooFewInliers
from birotation.evaluation.metrics import auc, rotation_error, translation_error
from birotation.evaluation.synthgen import NoiseSpec, apply_noise, perturbed_prior
from birotation.geometry.pose import (
    BasisAxis,
    CorrespondenceSet,
    count_positive_depths,
    enumerate_ambiguity,
    essential_from_birotation,
)
from birotation.geometry.so3 import RotationSO3, log_so3, skew
from birotation.solver.optimizer import (
    BirotationModelState,
    PriorPose,
    Termination,
    determine_sign,
    evaluate_state,
    gauss_newton_increment,
    initialize_models,
    min_inliers,
    optimize_all,
    optimize_model,
    select_model,
    solve,
    step,
    upper_quartile_weights,
)
from birotation.solver.residuals import ModelIndex


def _angle_deg(a: RotationSO3, b: RotationSO3) -> float:
    return float(np.degrees(np.linalg.norm(log_so3(a.T @ b))))


def test_upper_quartile_weights_drops_far_outlier():
    """Test the Tukey fence removes a single large residual."""
    e = np.array([0.1] * 10 + [5.0])
    mask = upper_quartile_weights(e)
    assert mask.sum() == 10
    assert mask[-1] == 0.0


def test_upper_quartile_weights_keeps_floor():
    """Test at least max(6, ceil(N/4)) residuals stay active."""
    e = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    mask = upper_quartile_weights(e)
    assert mask.sum() == 6
    assert min_inliers(100) == 25
    assert min_inliers(8) == 6


def test_upper_quartile_weights_ignores_invalid_rows():
    """Test invalid rows never receive weight."""
    e = np.linspace(0.0, 1.0, 12)
    valid = np.ones(12, dtype=bool)
    valid[0] = False
    mask = upper_quartile_weights(e, valid)
    assert mask[0] == 0.0
    assert mask[1:].sum() == 11


def test_gauss_newton_increment_single_row():
    """Test the closed-form increment for N = 1."""
    jac = np.array([[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]])
    delta = gauss_newton_increment(jac, [0.5], [1.0], alpha=1e-3)
    np.testing.assert_allclose(delta, [-0.5 / 1.001, 0, 0, 0, 0, 0], atol=1e-15)


def test_gauss_newton_increment_masked_rows_are_ignored():
    """Test a zero-weight row does not move the increment."""
    jac = np.array([[1.0, 0, 0, 0, 0, 0], [0, 1.0, 0, 0, 0, 0]])
    delta = gauss_newton_increment(jac, [0.5, 0.7], [1.0, 0.0], alpha=1e-3)
    assert delta[1] == 0.0


def test_gauss_newton_increment_ill_conditioned():
    """Test a badly scaled system is reported as singular."""
    jac = np.array([[1e10, 0, 0, 0, 0, 0]])
    with pytest.raises(SingularSystem):
        gauss_newton_increment(jac, [1.0], [1.0], alpha=1e-8)


def test_default_initialization_is_identity():
    """Test a prior without translation starts every model at R1 = R2 = I."""
    for state in initialize_models(PriorPose()):
        np.testing.assert_array_equal(state.r2.matrix, np.eye(3))
        np.testing.assert_array_equal(state.r1.matrix, np.eye(3))
        assert not state.init_fallback
        assert state.termination is Termination.NOT_RUN


def test_initialization_from_prior_translation():
    """Test row i of R2 is -t/|t| and R1 = R2 R_init."""
    prior = PriorPose(RotationSO3.about_axis(3, 0.2), [0.3, -0.4, 0.5])
    direction = np.array([0.3, -0.4, 0.5]) / np.linalg.norm([0.3, -0.4, 0.5])
    for state in initialize_models(prior):
        np.testing.assert_allclose(state.r2.row(state.model.value), -direction, atol=1e-12)
        np.testing.assert_allclose(state.r1.matrix, state.r2.matrix @ prior.rotation.matrix, atol=1e-12)


def test_initialization_falls_back_on_reference_axis():
    """Test a translation along the reference axis of model 1 triggers the default init."""
    states = initialize_models(PriorPose(translation=[0.0, 0.0, 2.0]))
    assert [s.init_fallback for s in states] == [True, False, False]
    np.testing.assert_array_equal(states[0].r2.matrix, np.eye(3))
    np.testing.assert_allclose(states[1].r2.row(2), [0.0, 0.0, -1.0], atol=1e-15)


def test_select_model_applies_beta():
    """Test beta weights resolve a factor-of-three gap in favour of model 1."""
    eye = RotationSO3.identity()
    states = [
        BirotationModelState(ModelIndex.X, eye, eye, d_hat=3.0),
        BirotationModelState(ModelIndex.Y, eye, eye, d_hat=1.0),
        BirotationModelState(ModelIndex.Z, eye, eye, d_hat=2.0),
    ]
    assert select_model(states, SolverConfig()) is ModelIndex.Y
    assert select_model(states, SolverConfig(beta=(0.25, 1.0, 1.0))) is ModelIndex.X


def test_select_model_tie_goes_to_smallest_index():
    """Test exact ties resolve to the lowest model index."""
    eye = RotationSO3.identity()
    states = [BirotationModelState(m, eye, eye, d_hat=1.0) for m in reversed(list(ModelIndex))]
    assert select_model(states, SolverConfig()) is ModelIndex.X


def test_select_model_breaks_near_ties_by_energy():
    """Test metrics within N * tol_value are decided by the regularized energy."""
    mask = np.ones(200)
    quarter = RotationSO3.about_axis(3, np.pi / 2)
    small = RotationSO3.about_axis(1, 0.1)
    eye = RotationSO3.identity()
    states = [
        BirotationModelState(ModelIndex.X, quarter, quarter, d_hat=0.0, mask=mask),
        BirotationModelState(ModelIndex.Y, eye, eye, d_hat=1e-7, mask=mask),
        BirotationModelState(ModelIndex.Z, small, small, d_hat=1e-9, mask=mask),
    ]
    assert select_model(states, SolverConfig()) is ModelIndex.Y
    # Outside the tie band the metric decides again.
    states[1] = BirotationModelState(ModelIndex.Y, eye, eye, d_hat=1e-3, mask=mask)
    assert select_model(states, SolverConfig()) is ModelIndex.Z
    assert states[0].energy(1e-3) == pytest.approx(2e-3 * (np.pi / 2) ** 2)


def _bearing_set(intrinsics, bars1, bars2):
    return CorrespondenceSet.from_bearings(bars1, bars2, intrinsics, intrinsics)


def test_determine_sign_from_rotated_coordinates(intrinsics):
    """Test the per-axis sign rules on single rotated correspondences."""
    eye = RotationSO3.identity()
    x_state = BirotationModelState(ModelIndex.X, eye, eye)
    z_state = BirotationModelState(ModelIndex.Z, eye, eye)
    assert determine_sign(x_state, _bearing_set(intrinsics, [[1.0, 0.0, 1.0]], [[0.0, 0.0, 1.0]])) == 1
    assert determine_sign(x_state, _bearing_set(intrinsics, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 1.0]])) == -1
    assert determine_sign(z_state, _bearing_set(intrinsics, [[0.1, 0.0, 1.0]], [[0.2, 0.0, 1.0]])) == 1


def test_determine_sign_without_parallax_is_indeterminate(intrinsics, rng):
    """Test identical rotated rays neither vote nor pass the depth check."""
    bars = np.column_stack([rng.uniform(-0.3, 0.3, 10), rng.uniform(-0.3, 0.3, 10), np.ones(10)])
    eye = RotationSO3.identity()
    for model in ModelIndex:
        with pytest.raises(IndeterminateSign):
            determine_sign(BirotationModelState(model, eye, eye), _bearing_set(intrinsics, bars, bars))


@pytest.mark.parametrize("sign", [1, -1])
def test_determine_sign_on_aligned_scenes(sign, make_scene):
    """Test a model aligned with the baseline votes the true sign."""
    pair = make_scene(seed=5, kind="basis-aligned", axis=3, sign=sign)
    c = pair.correspondences
    state = evaluate_state(initialize_models(PriorPose(), (3,))[0], c, SolverConfig())
    assert determine_sign(state, c) == sign


def test_too_few_correspondences(intrinsics):
    """Test fewer than six matches cannot be solved."""
    bars = np.column_stack([np.linspace(-0.2, 0.2, 5), np.zeros(5), np.ones(5)])
    c = CorrespondenceSet.from_bearings(bars, bars, intrinsics, intrinsics)
    with pytest.raises(TooFewInliers):
        solve(c)


@pytest.mark.parametrize("axis", [1, 2, 3])
def test_basis_aligned_scene_selects_its_model(axis, make_scene):
    """Test a scene translating along axis i with an identity prior selects model i."""
    for seed in range(10):
        pair = make_scene(seed=seed, kind="basis-aligned", axis=axis)
        estimate = solve(pair.correspondences, PriorPose(), SolverConfig())
        assert estimate.axis == axis
        assert estimate.initialization == "axis-default"


@pytest.mark.parametrize("axis", [1, 2, 3])
def test_basis_aligned_scene_with_exact_prior_selects_its_model(axis, make_scene):
    """Test exact priors select model i even though every model reaches a zero metric."""
    for seed in range(10):
        pair = make_scene(seed=seed, kind="basis-aligned", axis=axis)
        prior = PriorPose(pair.truth_rotation, pair.truth_translation)
        estimate = solve(pair.correspondences, prior, SolverConfig())
        assert estimate.axis == axis, seed
        assert estimate.initialization == "prior"


def test_x_translation_from_perturbed_prior(make_scene):
    """Test an X translation solved from a 3 degree prior selects model 1 and the true pose."""
    for seed in range(5):
        pair = make_scene(seed=seed, kind="basis-aligned", axis=1)
        prior = perturbed_prior(pair.truth, 3.0, np.random.default_rng(seed))
        estimate = solve(pair.correspondences, prior, SolverConfig())
        assert estimate.axis == BasisAxis.X, seed
        assert rotation_error(estimate.rotation, pair.truth_rotation) <= 1e-4
        assert translation_error(estimate.t_dir, pair.truth_translation) <= 1e-4


def test_step_at_zero_residual_stays_put(make_scene):
    """Test a step from the exact solution leaves both rotations unchanged."""
    pair = make_scene(seed=1, kind="basis-aligned", axis=1)
    c = pair.correspondences
    state = evaluate_state(initialize_models(PriorPose(pair.truth_rotation, pair.truth_translation))[0],
                           c, SolverConfig())
    moved = step(state, c, SolverConfig())
    np.testing.assert_allclose(moved.r1.matrix, state.r1.matrix, atol=1e-12)
    np.testing.assert_allclose(moved.r2.matrix, state.r2.matrix, atol=1e-12)
    assert moved.d_hat <= 1e-20
    assert moved.iterations == 1


def test_steps_decrease_metric_monotonically(make_scene):
    """Test ten Gauss-Newton steps from a 5 degree prior never increase d/N on exact data."""
    pair = make_scene(seed=6)
    c = pair.correspondences
    cfg = SolverConfig(outlier_rule=OutlierRule.NONE)
    prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(6))
    for state in initialize_models(prior):
        state = evaluate_state(state, c, cfg)
        trace = [state.d_hat / len(c)]
        for _ in range(10):
            state = step(state, c, cfg)
            trace.append(state.d_hat / len(c))
        assert all(b <= a + 1e-20 for a, b in zip(trace, trace[1:])), trace
        assert trace[-1] < trace[0]


def test_optimize_model_single_iteration(make_scene):
    """Test max_iters=1 performs exactly one step."""
    pair = make_scene(seed=8)
    prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(8))
    for state in initialize_models(prior):
        done = optimize_model(state, pair.correspondences, SolverConfig(max_iters=1))
        assert done.iterations == 1
        assert len(done.history) == 2


def test_default_tolerances_reach_exact_pose(make_scene):
    """Test the default config recovers noise-free poses to 1e-4 degrees from a 5 degree prior."""
    for seed in range(10):
        pair = make_scene(seed=seed)
        prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(seed))
        estimate = solve(pair.correspondences, prior, SolverConfig())
        assert estimate.metric < 1e-10, seed
        assert rotation_error(estimate.rotation, pair.truth_rotation) <= 1e-4, seed
        assert translation_error(estimate.t_dir, pair.truth_translation) <= 1e-4, seed


def test_exact_prior_converges_within_two_iterations(make_scene):
    """Test a model started at the exact pose stops after at most two steps."""
    pair = make_scene(seed=4)
    c = pair.correspondences
    states = optimize_all(c, PriorPose(pair.truth_rotation, pair.truth_translation), SolverConfig())
    for state in states.values():
        if state.init_fallback:
            continue
        assert state.iterations <= 2
        assert state.d_hat / len(c) < 1e-12


def test_scale_invariance(make_scene, intrinsics, rng, tight_config):
    """Test multiplying every depth by 10 leaves the estimate unchanged."""
    pair = make_scene(seed=12)
    c = pair.correspondences
    depths1 = rng.uniform(4.0, 8.0, size=(len(c), 1))
    depths2 = rng.uniform(4.0, 8.0, size=(len(c), 1))
    near = CorrespondenceSet.from_bearings(c.bars1 * depths1, c.bars2 * depths2, intrinsics, intrinsics)
    far = CorrespondenceSet.from_bearings(c.bars1 * depths1 * 10.0, c.bars2 * depths2 * 10.0,
                                          intrinsics, intrinsics)
    prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(12))
    a, b = solve(near, prior, tight_config), solve(far, prior, tight_config)
    np.testing.assert_allclose(a.rotation.matrix, b.rotation.matrix, atol=1e-9)
    np.testing.assert_allclose(a.t_dir, b.t_dir, atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_pure_rotation_with_default_config(seed, make_scene):
    """Test default tolerances report zero translation for both prior kinds."""
    pair = make_scene(seed=seed, kind="pure-rotation", max_deg=10.0)
    priors = [PriorPose(), perturbed_prior(pair.truth, 5.0, np.random.default_rng(seed))]
    for prior in priors:
        estimate = solve(pair.correspondences, prior, SolverConfig())
        assert estimate.is_pure_rotation, prior
        assert _angle_deg(estimate.rotation, pair.truth_rotation) <= 1e-3



@pytest.mark.parametrize("sign", [1, -1])
def test_translation_sign_vote(sign, make_scene):
    """Test the recovered direction follows the true translation sign."""
    pair = make_scene(seed=7, kind="basis-aligned", axis=1, sign=sign)
    estimate = solve(pair.correspondences, PriorPose(), SolverConfig())
    expected = pair.truth_translation / np.linalg.norm(pair.truth_translation)
    np.testing.assert_allclose(estimate.t_dir, expected, atol=1e-9)
    assert estimate.sign_resolved


def test_model_ablation(make_scene, tight_config):
    """Test only the requested models are optimized and reported."""
    pair = make_scene(seed=2)
    prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(2))
    cfg = tight_config.model_copy(update={"models": (2,)})
    estimate = solve(pair.correspondences, prior, cfg)
    assert estimate.axis == BasisAxis.Y
    assert [int(m.axis) for m in estimate.models] == [2]
    assert rotation_error(estimate.rotation, pair.truth_rotation) <= 1e-4


def test_per_model_reports(make_scene, tight_config):
    """Test the estimate carries every model's metric, iterations and termination."""
    pair = make_scene(seed=9)
    prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(9))
    estimate = solve(pair.correspondences, prior, tight_config)
    assert [int(m.axis) for m in estimate.models] == [1, 2, 3]
    for report in estimate.models:
        assert report.iterations >= 1
        assert report.termination in {t.value for t in Termination}
    states = optimize_all(pair.correspondences, prior, tight_config)
    for state in states.values():
        assert len(state.history) == state.iterations + 1
        assert state.history[-1] == state.d_hat


@pytest.mark.slow
def test_exact_recovery_of_random_scenes(make_scene, tight_config):
    """Test noise-free scenes are recovered to 1e-4 degrees from a 5 degree prior."""
    for seed in range(100):
        pair = make_scene(seed=seed, kind="random", max_deg=30.0)
        prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(1000 + seed))
        estimate = solve(pair.correspondences, prior, tight_config)
        assert rotation_error(estimate.rotation, pair.truth_rotation) <= 1e-4, seed
        assert translation_error(estimate.t_dir, pair.truth_translation) <= 1e-4, seed


@pytest.mark.slow
def test_pure_rotation_scenes(make_scene, tight_config):
    """Test zero-baseline scenes return the rotation with zero translation."""
    pure = 0
    for seed in range(100):
        pair = make_scene(seed=seed, kind="pure-rotation", max_deg=10.0)
        prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(seed))
        estimate = solve(pair.correspondences, prior, tight_config)
        assert _angle_deg(estimate.rotation, pair.truth_rotation) <= 1e-3, seed
        pure += estimate.is_pure_rotation
    assert pure >= 99


@pytest.mark.slow
def test_pure_rotation_under_noise(make_scene):
    """Test rotation AUC at 5 degrees stays above 95 with 0.1 px noise."""
    errors = []
    for seed in range(30):
        pair = make_scene(seed=seed, kind="pure-rotation", max_deg=10.0)
        noisy = apply_noise(pair, NoiseSpec(sigma_px=0.1), seed)
        prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(seed))
        estimate = solve(noisy.correspondences, prior, SolverConfig())
        errors.append(rotation_error(estimate.rotation, pair.truth_rotation))
    assert auc(errors, [5.0])[5.0] >= 95.0


@pytest.mark.slow
def test_essential_matrix_certificate(make_scene, tight_config):
    """Test converged solutions satisfy the epipolar constraint on inliers."""
    for seed in range(100):
        pair = make_scene(seed=seed)
        c = pair.correspondences
        prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(seed))
        estimate = solve(c, prior, tight_config)
        e = essential_from_birotation(estimate.r1, estimate.r2, estimate.axis)
        np.testing.assert_allclose(
            e, skew(estimate.r2.row(estimate.axis.value)) @ estimate.r2.matrix.T @ estimate.r1.matrix,
            atol=1e-10,
        )
        algebraic = np.abs(np.einsum("ij,jk,ik->i", c.bars2, e, c.bars1))
        assert algebraic.max() <= 1e-8, seed


@pytest.mark.slow
def test_ambiguity_has_one_unanimous_candidate(make_scene, tight_config):
    """Test exactly one of the four candidates puts every point in front of both cameras."""
    for seed in range(50):
        pair = make_scene(seed=seed)
        c = pair.correspondences
        prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(seed))
        estimate = solve(c, prior, tight_config)
        candidates = enumerate_ambiguity(estimate.r1, estimate.r2, estimate.axis)
        votes = [count_positive_depths(k, c) for k in candidates]
        unanimous = [k for k, v in zip(candidates, votes) if v == len(c)]
        assert len(unanimous) == 1, (seed, votes)
        assert _angle_deg(unanimous[0].rotation, pair.truth_rotation) <= 1e-6
        truth_dir = pair.truth_translation / np.linalg.norm(pair.truth_translation)
        np.testing.assert_allclose(unanimous[0].t_dir, truth_dir, atol=1e-8)


def test_disambiguate_returns_the_true_pose(make_scene, tight_config):
    """Test cheirality disambiguation agrees with ground truth."""
    pair = make_scene(seed=21)
    prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(21))
    cfg = tight_config.model_copy(update={"disambiguate": True})
    estimate = solve(pair.correspondences, prior, cfg)
    truth_dir = pair.truth_translation / np.linalg.norm(pair.truth_translation)
    np.testing.assert_allclose(estimate.t_dir, truth_dir, atol=1e-8)
    assert rotation_error(estimate.rotation, pair.truth_rotation) <= 1e-4


@pytest.mark.slow
def test_mismatch_weighting_effect(make_scene):
    """Test Tukey weighting keeps errors near the clean level while plain least squares degrades."""
    tukey = SolverConfig()
    plain = SolverConfig(outlier_rule=OutlierRule.NONE)

    def mean_error(rate, cfg):
        errors = []
        for seed in range(10):
            pair = make_scene(seed=seed)
            noisy = apply_noise(pair, NoiseSpec(sigma_px=0.1, mismatch_rate=rate, outlier_sigma_px=10.0), seed)
            prior = perturbed_prior(pair.truth, 5.0, np.random.default_rng(seed))
            estimate = solve(noisy.correspondences, prior, cfg)
            errors.append(rotation_error(estimate.rotation, pair.truth_rotation))
        return float(np.mean(errors))

    clean = mean_error(0.0, tukey)
    assert math.isfinite(clean)
    assert mean_error(0.25, tukey) <= 5.0 * clean
    assert mean_error(0.25, plain) >= 10.0 * mean_error(0.0, plain)
