"""
Inference Schemas
"""

from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from curesimex.core.exceptions import InvalidArgumentError


class BootstrapReport(BaseModel):
    """Point estimates with bootstrap standard deviations and Wald p-values."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    estimates: np.ndarray
    sd: np.ndarray
    p_values: np.ndarray
    n_boot: int = Field(ge=2)
    n_failed: int = Field(default=0, ge=0)
    names: Optional[tuple[str, ...]] = None

    @field_validator("estimates", "sd", "p_values", mode="before")
    @classmethod
    def validate_vector(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=float, copy=True).reshape(-1)
        arr.setflags(write=False)
        return arr

    @field_validator("sd")
    @classmethod
    def validate_sd(cls, v: np.ndarray) -> np.ndarray:
        if np.any(v < 0):
            raise InvalidArgumentError("bootstrap sd must be >= 0", "sd")
        return v

    @field_validator("p_values")
    @classmethod
    def validate_p_values(cls, v: np.ndarray) -> np.ndarray:
        if np.any((v < 0) | (v > 1)):
            raise InvalidArgumentError("p-values must lie in [0, 1]", "p_values")
        return v

    def rows(self) -> list[dict[str, Any]]:
        names = self.names or tuple(f"theta{j}" for j in range(self.estimates.size))
        return [
            {
                "parameter": name,
                "estimate": float(est),
                "sd": float(sd),
                "p_value": float(p),
            }
            for name, est, sd, p in zip(names, self.estimates, self.sd, self.p_values)
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_boot": self.n_boot,
            "n_failed": self.n_failed,
            "parameters": self.rows(),
        }


class CureProbabilityRow(BaseModel):
    """Cure probability of one covariate profile."""

    model_config = ConfigDict(frozen=True)

    profile: str
    covariates: tuple[float, ...]
    cure_probability: float = Field(ge=0, le=1)
