"""
Monte Carlo Lab Schemas

Simulation scenarios, study arms and the bias/variance/MSE summaries.
"""

from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from curesimex.core.constants import REPORT_SCALE
from curesimex.core.exceptions import InvalidArgumentError
from curesimex.mclab.constants import (
    DEFAULT_ERROR_DF,
    DEFAULT_SAMPLE_SIZE,
    MODEL_LAYOUTS,
    WEIBULL_MU,
    WEIBULL_RHO,
    ErrorKind,
    StudyMethod,
)
from curesimex.model.schemas import ModelLayout
from curesimex.simex.constants import Extrapolant


# ============================================================================
# Scenarios
# ============================================================================


class ScenarioSpec(BaseModel):
    """One data-generating design of the simulation study."""

    model_config = ConfigDict(frozen=True)

    model_id: int = Field(ge=1, le=5)
    gamma_true: tuple[float, ...]
    beta_true: tuple[float, ...]
    rho: float = Field(default=WEIBULL_RHO, gt=0)
    mu: float = Field(default=WEIBULL_MU, gt=0)
    censor_rate: float = Field(description="Exponential censoring rate lambda_C")
    tau0: float = Field(gt=0, description="Truncation of the uncured event times")
    tau: float = Field(gt=0, description="Truncation of the censoring times")
    error_sd: tuple[float, ...] = Field(
        description="True error sd per covariate column"
    )
    assumed_error_sd: Optional[tuple[float, ...]] = Field(
        default=None, description="Error sd handed to SIMEX; defaults to error_sd"
    )
    error_kind: ErrorKind = ErrorKind.NORMAL
    error_df: int = Field(default=DEFAULT_ERROR_DF, ge=1)
    n: int = Field(default=DEFAULT_SAMPLE_SIZE, ge=2)
    label: str = ""
    cure_rate: Optional[float] = Field(default=None, description="Reported cure rate")
    censoring_rate: Optional[float] = Field(
        default=None, description="Reported censoring rate"
    )

    @field_validator("censor_rate")
    @classmethod
    def validate_censor_rate(cls, v: float) -> float:
        if not v > 0:
            raise InvalidArgumentError("censoring rate must be positive", "censor_rate")
        return v

    @model_validator(mode="after")
    def validate_design(self) -> "ScenarioSpec":
        if not self.tau0 < self.tau:
            raise InvalidArgumentError("tau0 must be smaller than tau", "tau0")
        incidence, latency, names = MODEL_LAYOUTS[self.model_id]
        if len(self.gamma_true) != len(incidence) + 1:
            raise InvalidArgumentError(
                f"model {self.model_id} needs {len(incidence) + 1} gamma values",
                "gamma_true",
            )
        if len(self.beta_true) != len(latency):
            raise InvalidArgumentError(
                f"model {self.model_id} needs {len(latency)} beta values", "beta_true"
            )
        for name in ("error_sd", "assumed_error_sd"):
            sd = getattr(self, name)
            if sd is None:
                continue
            if len(sd) != len(names):
                raise InvalidArgumentError(
                    f"model {self.model_id} needs {len(names)} error sds", name
                )
            if any(v < 0 for v in sd):
                raise InvalidArgumentError("error sds must be >= 0", name)
        return self

    @property
    def column_names(self) -> tuple[str, ...]:
        return MODEL_LAYOUTS[self.model_id][2]

    @property
    def truth(self) -> np.ndarray:
        return np.array(self.gamma_true + self.beta_true, dtype=float)

    def layout(self) -> ModelLayout:
        """Layout with the error covariance SIMEX assumes."""
        incidence, latency, _ = MODEL_LAYOUTS[self.model_id]
        sd = self.error_sd
        if self.assumed_error_sd is not None:
            sd = self.assumed_error_sd
        return ModelLayout.from_error_sd(incidence, latency, sd)

    def parameter_names(self) -> list[str]:
        return self.layout().parameter_names(self.column_names)

    def with_overrides(self, **changes: Any) -> "ScenarioSpec":
        data = self.model_dump()
        data.update({k: v for k, v in changes.items() if v is not None})
        return ScenarioSpec(**data)


# ============================================================================
# Summaries
# ============================================================================


class ParameterSummary(BaseModel):
    """Bias, variance and MSE of one parameter, stored unscaled."""

    model_config = ConfigDict(frozen=True)

    name: str
    truth: float
    bias: float
    variance: float
    mse: float

    def row(self, method: str, scale: float = REPORT_SCALE) -> dict[str, Any]:
        return {
            "parameter": self.name,
            "method": method,
            "bias_x100": self.bias * scale,
            "var_x100": self.variance * scale,
            "mse_x100": self.mse * scale,
        }


class McSummary(BaseModel):
    """Monte Carlo summary over the successful replicates."""

    model_config = ConfigDict(frozen=True)

    parameters: tuple[ParameterSummary, ...]
    replicates: int
    n_failed: int = 0
    method: str = ""
    label: str = ""

    def rows(self) -> list[dict[str, Any]]:
        """Table rows scaled by 100."""
        return [p.row(self.method) for p in self.parameters]

    def by_name(self, name: str) -> ParameterSummary:
        for p in self.parameters:
            if p.name == name:
                return p
        raise InvalidArgumentError(f"no parameter named {name!r}", "name")


# ============================================================================
# Studies
# ============================================================================


class StudyArm(BaseModel):
    """One arm of a declarative study: a preset plus overrides and a method."""

    model_config = ConfigDict(frozen=True)

    name: str
    preset: str
    method: StudyMethod = StudyMethod.NAIVE_MLE
    replicates: int = Field(default=500, ge=2)
    sample_size: Optional[int] = Field(default=None, ge=2)
    error_sd: Optional[tuple[float, ...]] = None
    assumed_error_sd: Optional[tuple[float, ...]] = None
    error_kind: Optional[ErrorKind] = None
    error_df: Optional[int] = Field(default=None, ge=1)
    extrapolant: Extrapolant = Extrapolant.QUADRATIC
    lambdas: Optional[tuple[float, ...]] = None
    B: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)


class StudyResult(BaseModel):
    """Summaries of every arm of a study run."""

    model_config = ConfigDict(frozen=True)

    arms: tuple[StudyArm, ...]
    summaries: tuple[McSummary, ...]

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for arm, summary in zip(self.arms, self.summaries):
            for row in summary.rows():
                out.append({"arm": arm.name, "label": summary.label, **row})
        return out
