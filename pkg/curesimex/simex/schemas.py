"""
SIMEX Schemas

Options of a SIMEX run, the per-lambda averaged fits and the extrapolated
result.
"""

from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from curesimex.core.config import get_settings
from curesimex.core.exceptions import InvalidArgumentError
from curesimex.model.schemas import CureFit, StepFunction
from curesimex.simex.constants import DEFAULT_LAMBDAS, Extrapolant


class SimexOptions(BaseModel):
    """Noise levels, replicate count, extrapolant and seed of a SIMEX run."""

    model_config = ConfigDict(frozen=True)

    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    B: int = Field(default_factory=lambda: get_settings().simex_B, ge=1)
    extrapolant: Extrapolant = Extrapolant.QUADRATIC
    isotonize: bool = True
    seed: int = Field(default_factory=lambda: get_settings().default_seed, ge=0)
    jobs: Optional[int] = Field(default=1, ge=1)
    failure_threshold: float = Field(
        default_factory=lambda: get_settings().simex_failure_threshold, ge=0, le=1
    )

    @field_validator("lambdas")
    @classmethod
    def validate_lambdas(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v:
            raise InvalidArgumentError("at least one lambda is required", "lambdas")
        if any(lam < 0 for lam in v):
            raise InvalidArgumentError("lambdas must be >= 0", "lambdas")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise InvalidArgumentError("lambdas must be strictly increasing", "lambdas")
        return v

    @model_validator(mode="after")
    def validate_degree(self) -> "SimexOptions":
        if len(self.lambdas) < self.extrapolant.degree + 1:
            raise InvalidArgumentError(
                f"{self.extrapolant.value} extrapolation needs at least "
                f"{self.extrapolant.degree + 1} lambda levels",
                "lambdas",
            )
        return self


class AveragedFit(BaseModel):
    """Average of the fits obtained at one noise level."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lam: float
    gamma_bar: np.ndarray
    beta_bar: np.ndarray
    lambda_bar: StepFunction
    tau0: float
    n_fits: int
    n_failed: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lam,
            "gamma": self.gamma_bar.tolist(),
            "beta": self.beta_bar.tolist(),
            "baseline": self.lambda_bar.to_rows(),
            "n_fits": self.n_fits,
            "n_failed": self.n_failed,
        }


class SimexResult(BaseModel):
    """Bias-corrected parameters at lambda = -1 and the curves behind them."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    per_lambda: tuple[AveragedFit, ...]
    extrapolant: Extrapolant
    gamma_coeffs: np.ndarray = Field(description="One row of a-coefficients per gamma")
    beta_coeffs: np.ndarray = Field(description="One row of a-coefficients per beta")
    baseline_coeffs: np.ndarray = Field(description="One row per baseline jump time")
    gamma_simex: np.ndarray
    beta_simex: np.ndarray
    baseline_simex: StepFunction
    baseline_was_monotone: bool
    tau0: float
    method: Optional[str] = None

    @property
    def lambdas(self) -> tuple[float, ...]:
        return tuple(avg.lam for avg in self.per_lambda)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.gamma_simex, self.beta_simex])

    def as_cure_fit(self) -> CureFit:
        """
        The corrected parameters as a fit usable by the model operations.

        A baseline left non-monotone (``isotonize=False``) is not a valid
        cumulative hazard and raises ``InvalidArgumentError``.
        """
        return CureFit(
            gamma=self.gamma_simex,
            beta=self.beta_simex,
            baseline=self.baseline_simex,
            tau0=self.tau0,
            method=f"simex-{self.method}" if self.method else "simex",
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "extrapolant": self.extrapolant.value,
            "gamma": self.gamma_simex.tolist(),
            "beta": self.beta_simex.tolist(),
            "baseline": self.baseline_simex.to_rows(),
            "baseline_was_monotone": self.baseline_was_monotone,
            "tau0": self.tau0,
            "extrapolant_coefficients": {
                "gamma": self.gamma_coeffs.tolist(),
                "beta": self.beta_coeffs.tolist(),
                "baseline": self.baseline_coeffs.tolist(),
            },
            "per_lambda": [avg.to_dict() for avg in self.per_lambda],
        }
