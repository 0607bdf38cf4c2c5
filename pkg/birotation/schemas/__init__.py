"""Pydantic schemas for the JSON file formats."""
from birotation.schemas.correspondence import CorrespondenceFile
from birotation.schemas.pose import ModelDiagnostics, PoseFile, TrajectoryFile
from birotation.schemas.report import EvalReport, PairErrors

__all__ = [
    "CorrespondenceFile",
    "ModelDiagnostics", "PoseFile", "TrajectoryFile",
    "EvalReport", "PairErrors",
]
