"""Accuracy metrics and synthetic benchmarks."""
from birotation.evaluation.metrics import auc, error_summary, rotation_error, translation_error
from birotation.evaluation.synthgen import (
    NoiseSpec,
    PoseSampler,
    SceneSpec,
    apply_noise,
    generate_scene,
    perturbed_prior,
    sweep,
)

__all__ = [
    "auc", "error_summary", "rotation_error", "translation_error",
    "NoiseSpec", "PoseSampler", "SceneSpec", "apply_noise", "generate_scene",
    "perturbed_prior", "sweep",
]
