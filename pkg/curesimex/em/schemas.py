"""
EM Estimator Schemas

Options and intermediate results of the EM fit.
"""

from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from curesimex.core.config import get_settings
from curesimex.core.exceptions import InvalidArgumentError
from curesimex.model.schemas import StepFunction


class EmOptions(BaseModel):
    """Controls for the EM loop and its inner Newton solvers."""

    model_config = ConfigDict(frozen=True)

    max_iter: int = Field(default_factory=lambda: get_settings().em_max_iter, gt=0)
    tol: float = Field(
        default_factory=lambda: get_settings().em_tol,
        gt=0,
        description="Max absolute change over (gamma, beta) that stops the loop",
    )
    inner_newton_iter: int = Field(default=25, gt=0)
    inner_tol: float = Field(default=1e-10, gt=0)
    tau0: Optional[float] = Field(
        default=None,
        description="Identifiability horizon; defaults to the last event time",
    )

    @field_validator("tau0")
    @classmethod
    def validate_tau0(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not (np.isfinite(v) and v > 0):
            raise InvalidArgumentError("tau0 must be a positive finite time", "tau0")
        return v


class UncureWeights(BaseModel):
    """Posterior probabilities of being uncured, one per record."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    w: np.ndarray

    @field_validator("w", mode="before")
    @classmethod
    def validate_weights(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=float, copy=True).reshape(-1)
        if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
            raise InvalidArgumentError("weights must lie in [0, 1]", "w")
        arr.setflags(write=False)
        return arr


class IncidenceStep(BaseModel):
    """Result of the weighted logistic M-step."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gamma: np.ndarray
    converged: bool
    diverged: bool
    iterations: int


class LatencyStep(BaseModel):
    """Result of the weighted Cox M-step with its Breslow baseline."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    beta: np.ndarray
    baseline: StepFunction
    converged: bool
    diverged: bool
    iterations: int
