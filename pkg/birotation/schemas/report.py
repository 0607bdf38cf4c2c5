"""Evaluation report schema."""
from typing import Dict, List

from pydantic import BaseModel


class PairErrors(BaseModel):
    name: str
    eps_r: float
    eps_t: float


class EvalReport(BaseModel):
    """Mean absolute component errors, per-pair angular errors and pose AUC."""
    pairs: int
    delta_theta_bar: List[float]
    delta_t_bar: List[float]
    auc: Dict[str, float]
    errors: List[PairErrors]
