"""Pose file schemas."""
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from birotation.geometry.pose import ModelReport, Pose, RelativePoseEstimate


class ModelDiagnostics(BaseModel):
    """Final state of one birotation model."""
    axis: int = Field(..., ge=1, le=3)
    metric: float
    iterations: int = Field(..., ge=0)
    termination: str
    init_fallback: bool = False

    @classmethod
    def from_report(cls, report: ModelReport) -> "ModelDiagnostics":
        return cls(axis=int(report.axis), metric=report.metric, iterations=report.iterations,
                   termination=report.termination, init_fallback=report.init_fallback)


class PoseFile(BaseModel):
    """Relative pose: row-major rotation and translation, plus solver provenance."""

    model_config = ConfigDict(allow_inf_nan=False)

    rotation: List[float] = Field(..., min_length=9, max_length=9)
    translation: List[float] = Field(..., min_length=3, max_length=3)
    axis: Optional[int] = Field(None, ge=1, le=3)
    metric: Optional[float] = None
    converged: Optional[bool] = None
    # Provenance
    s_sign: Optional[int] = None
    sign_resolved: Optional[bool] = None
    iterations: Optional[int] = None
    initialization: Optional[str] = None
    beta: Optional[Tuple[float, float, float]] = None
    models: Optional[List[ModelDiagnostics]] = None

    @classmethod
    def from_pose(cls, pose: Pose) -> "PoseFile":
        return cls(rotation=[float(v) for v in pose.rotation.matrix.reshape(-1)],
                   translation=[float(v) for v in pose.translation])

    @classmethod
    def from_estimate(cls, estimate: RelativePoseEstimate,
                      beta: Optional[Tuple[float, float, float]] = None) -> "PoseFile":
        return cls(
            rotation=[float(v) for v in estimate.rotation.matrix.reshape(-1)],
            translation=[float(v) for v in estimate.t_dir],
            axis=int(estimate.axis),
            metric=float(estimate.metric),
            converged=estimate.converged,
            s_sign=estimate.s_sign,
            sign_resolved=estimate.sign_resolved,
            iterations=estimate.iterations,
            initialization=estimate.initialization,
            beta=beta,
            models=[ModelDiagnostics.from_report(r) for r in estimate.models] or None,
        )


class TrajectoryFile(BaseModel):
    """Camera poses of a chained trajectory; frame 0 is the identity."""
    frames: List[PoseFile]
