"""Rotation algebra, correspondences and pose recovery."""
from birotation.geometry.so3 import RotationSO3, exp_so3, is_rotation, log_so3, skew
from birotation.geometry.pose import (
    BasisAxis,
    CorrespondenceSet,
    Intrinsics,
    Pose,
    RelativePoseEstimate,
    chain_poses,
    cheirality_select,
    count_positive_depths,
    enumerate_ambiguity,
    essential_from_birotation,
    normalize,
    recover_pose,
)

__all__ = [
    "RotationSO3", "exp_so3", "is_rotation", "log_so3", "skew",
    "BasisAxis", "CorrespondenceSet", "Intrinsics", "Pose", "RelativePoseEstimate",
    "chain_poses", "cheirality_select", "count_positive_depths", "enumerate_ambiguity",
    "essential_from_birotation", "normalize", "recover_pose",
]
