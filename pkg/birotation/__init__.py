"""Relative pose estimation of two calibrated views with birotation models."""
from birotation.config import SolverConfig, settings
from birotation.errors import BirotationError, InputError, SolverError
from birotation.geometry import CorrespondenceSet, Intrinsics, RelativePoseEstimate, RotationSO3
from birotation.solver import PriorPose, solve

__version__ = "0.1.0"

__all__ = [
    "SolverConfig", "settings",
    "BirotationError", "InputError", "SolverError",
    "CorrespondenceSet", "Intrinsics", "RelativePoseEstimate", "RotationSO3",
    "PriorPose", "solve",
]
