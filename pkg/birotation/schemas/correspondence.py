"""Correspondence file schema."""
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from birotation.geometry.pose import CorrespondenceSet, Intrinsics


class CorrespondenceFile(BaseModel):
    """Two camera intrinsics plus pixel matches [u1, v1, u2, v2]."""

    model_config = ConfigDict(allow_inf_nan=False, extra="forbid")

    intrinsics1: Intrinsics
    intrinsics2: Intrinsics
    matches: List[Tuple[float, float, float, float]] = Field(..., min_length=1)

    def to_correspondences(self) -> CorrespondenceSet:
        m = np.asarray(self.matches, dtype=np.float64)
        return CorrespondenceSet.from_pixels(m[:, :2], m[:, 2:], self.intrinsics1, self.intrinsics2)

    @classmethod
    def from_correspondences(cls, correspondences: CorrespondenceSet) -> "CorrespondenceFile":
        rows = np.hstack([correspondences.pixels1, correspondences.pixels2])
        return cls(
            intrinsics1=correspondences.intrinsics1,
            intrinsics2=correspondences.intrinsics2,
            matches=[tuple(float(v) for v in row) for row in rows],
        )
