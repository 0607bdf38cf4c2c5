"""Solver configuration and package settings."""
import enum
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class OutlierRule(str, enum.Enum):
    """Per-iteration outlier weighting rule."""
    TUKEY = "tukey"
    NONE = "none"


# Selection weights for the three birotation models.
BETA_PRESETS = {
    "generic": (1.0, 1.0, 1.0),
    "stereo": (0.25, 1.0, 1.0),
    "odometry": (1.0, 1.0, 0.25),
}


class SolverConfig(BaseModel):
    """Parameters of a single solve."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    alpha: float = Field(default=1e-3, gt=0)
    beta: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    tol_value: float = Field(default=1e-8, gt=0)
    tol_rate: float = Field(default=1e-6, gt=0)
    max_iters: int = Field(default=200, ge=1)
    outlier_rule: OutlierRule = OutlierRule.TUKEY
    disambiguate: bool = False
    seed: int = Field(default=0, ge=0)
    # Floor on the sign-vote margin, in normalized image units.
    sign_tol: float = Field(default=1e-9, gt=0)
    models: Tuple[int, ...] = (1, 2, 3)

    @field_validator("beta")
    @classmethod
    def _beta_positive(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(b <= 0 for b in value):
            raise ValueError("every beta weight must be positive")
        return value

    @field_validator("models")
    @classmethod
    def _models_subset(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value:
            raise ValueError("at least one model must be active")
        if any(m not in (1, 2, 3) for m in value):
            raise ValueError("models must be drawn from 1, 2, 3")
        return tuple(sorted(set(value)))


class Settings(BaseSettings):
    """Package defaults.

    Only explicit init arguments are honoured: environment variables and
    .env files are never read, so every run is reproducible from its
    command line.
    """

    alpha: float = 1e-3
    beta: Tuple[float, float, float] = BETA_PRESETS["generic"]
    tol_value: float = 1e-8
    tol_rate: float = 1e-6
    max_iters: int = 200
    outlier_rule: OutlierRule = OutlierRule.TUKEY
    sign_tol: float = 1e-9

    log_level: str = "WARNING"
    sweep_workers: int = 1

    model_config = SettingsConfigDict(
        case_sensitive=False,
        extra="ignore",
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls,
        init_settings,
        env_settings,
        dotenv_settings,
        file_secret_settings,
    ):
        return (init_settings,)

    def solver_config(self, **overrides) -> SolverConfig:
        """Build a SolverConfig from these defaults, applying overrides."""
        values = {
            "alpha": self.alpha,
            "beta": self.beta,
            "tol_value": self.tol_value,
            "tol_rate": self.tol_rate,
            "max_iters": self.max_iters,
            "outlier_rule": self.outlier_rule,
            "sign_tol": self.sign_tol,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return SolverConfig(**values)


settings = Settings()
