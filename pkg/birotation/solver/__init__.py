"""Birotation residuals and the three-model Gauss-Newton solver."""
from birotation.solver.residuals import (
    ModelIndex,
    discretized_metric,
    energy,
    jacobian,
    residual,
    residual_vector,
)
from birotation.solver.optimizer import (
    BirotationModelState,
    PriorPose,
    determine_sign,
    gauss_newton_increment,
    initialize_models,
    optimize_model,
    select_model,
    solve,
    step,
    upper_quartile_weights,
)

__all__ = [
    "ModelIndex", "discretized_metric", "energy", "jacobian", "residual", "residual_vector",
    "BirotationModelState", "PriorPose", "determine_sign", "gauss_newton_increment",
    "initialize_models", "optimize_model", "select_model", "solve", "step",
    "upper_quartile_weights",
]
