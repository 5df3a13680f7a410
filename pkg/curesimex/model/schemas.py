"""
Domain types for the mixture cure model.

Survival data (records, datasets), the covariate layout with its error
covariance, right-continuous step functions and fitted models. All types are
immutable after construction; numpy payloads are stored read-only.
"""

from collections.abc import Sequence
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from curesimex.core.constants import PSD_TOLERANCE
from curesimex.core.exceptions import InvalidArgumentError


def _frozen_array(
    value: Any, dtype: Any = float, ndim: int | None = None
) -> np.ndarray:
    arr = np.array(value, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        if ndim == 2 and arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        else:
            raise InvalidArgumentError(
                f"expected a {ndim}-d array, got shape {arr.shape}"
            )
    arr.setflags(write=False)
    return arr


class _ArrayModel(BaseModel):
    """Base for frozen models carrying numpy arrays."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# ============================================================================
# Survival data
# ============================================================================


class SurvivalRecord(_ArrayModel):
    """One subject: follow-up time, event indicator and covariate vector."""

    y: float = Field(description="Follow-up time min(T, C)")
    delta: int = Field(description="1 = event observed, 0 = censored")
    w: np.ndarray = Field(description="Covariate vector of length D")

    @field_validator("y")
    @classmethod
    def validate_time(cls, v: float) -> float:
        if not np.isfinite(v) or v < 0:
            raise InvalidArgumentError("follow-up time must be finite and >= 0", "y")
        return v

    @field_validator("delta")
    @classmethod
    def validate_delta(cls, v: int) -> int:
        if v not in (0, 1):
            raise InvalidArgumentError("delta must be 0 or 1", "delta")
        return v

    @field_validator("w", mode="before")
    @classmethod
    def validate_covariates(cls, v: Any) -> np.ndarray:
        arr = _frozen_array(v, ndim=1)
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("covariates must be finite", "w")
        return arr


class Dataset(_ArrayModel):
    """
    Right-censored survival data with D covariate columns.

    Stored column-wise (times, status, covariates); ``records`` gives the
    record view.
    """

    times: np.ndarray
    status: np.ndarray
    covariates: np.ndarray
    column_names: tuple[str, ...]

    @field_validator("times", mode="before")
    @classmethod
    def validate_times(cls, v: Any) -> np.ndarray:
        arr = _frozen_array(v, ndim=1)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidArgumentError(
                "follow-up times must be finite and >= 0", "times"
            )
        return arr

    @field_validator("status", mode="before")
    @classmethod
    def validate_status(cls, v: Any) -> np.ndarray:
        arr = _frozen_array(v, dtype=float, ndim=1)
        if not np.all(np.isin(arr, (0.0, 1.0))):
            raise InvalidArgumentError("status must be 0 or 1", "status")
        return _frozen_array(arr, dtype=np.int8)

    @field_validator("covariates", mode="before")
    @classmethod
    def validate_covariates(cls, v: Any) -> np.ndarray:
        arr = _frozen_array(v, ndim=2)
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("covariates must be finite", "covariates")
        return arr

    @model_validator(mode="after")
    def validate_shapes(self) -> "Dataset":
        n = self.times.shape[0]
        if self.status.shape[0] != n or self.covariates.shape[0] != n:
            raise InvalidArgumentError("times, status and covariates differ in length")
        if self.covariates.shape[1] != len(self.column_names):
            raise InvalidArgumentError(
                f"{self.covariates.shape[1]} covariate columns but "
                f"{len(self.column_names)} column names"
            )
        return self

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def from_records(
        cls,
        records: Sequence[SurvivalRecord],
        column_names: Sequence[str] | None = None,
    ) -> "Dataset":
        """Build a dataset from records with identical covariate dimension."""
        if not records:
            raise InvalidArgumentError("dataset needs at least one record", "records")
        dims = {r.w.shape[0] for r in records}
        if len(dims) != 1:
            raise InvalidArgumentError("records have different covariate dimensions")
        dim = dims.pop()
        if column_names:
            names = tuple(column_names)
        else:
            names = tuple(f"w{j}" for j in range(dim))
        return cls(
            times=[r.y for r in records],
            status=[r.delta for r in records],
            covariates=np.vstack([r.w for r in records]).reshape(len(records), dim),
            column_names=names,
        )

    # ------------------------------------------------------------------
    # Views
    # ------------------------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.times.shape[0])

    @property
    def dim(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def records(self) -> list[SurvivalRecord]:
        return [
            SurvivalRecord(y=float(y), delta=int(d), w=w)
            for y, d, w in zip(self.times, self.status, self.covariates)
        ]

    @property
    def n_events(self) -> int:
        return int(self.status.sum())

    @property
    def event_times(self) -> np.ndarray:
        """Distinct observed event times, increasing."""
        return np.unique(self.times[self.status == 1])

    @property
    def last_event_time(self) -> float:
        events = self.event_times
        if events.size == 0:
            raise InvalidArgumentError("dataset has no observed events", "status")
        return float(events[-1])

    def incidence_design(self, layout: "ModelLayout") -> np.ndarray:
        """Incidence design matrix X with the implicit leading column of ones."""
        cols = self.covariates[:, list(layout.incidence_idx)]
        return np.column_stack([np.ones(self.n), cols])

    def latency_design(self, layout: "ModelLayout") -> np.ndarray:
        """Latency design matrix Z (no intercept)."""
        return self.covariates[:, list(layout.latency_idx)].reshape(self.n, -1)

    # ------------------------------------------------------------------
    # Derived datasets
    # ------------------------------------------------------------------

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        """Records at ``indices`` (repetitions allowed, as in resampling)."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            times=self.times[idx],
            status=self.status[idx],
            covariates=self.covariates[idx],
            column_names=self.column_names,
        )

    def with_covariates(self, covariates: np.ndarray) -> "Dataset":
        """Same times and indicators with replaced covariates."""
        return Dataset(
            times=self.times,
            status=self.status,
            covariates=covariates,
            column_names=self.column_names,
        )

    def center_columns(self, columns: Sequence[int]) -> "Dataset":
        """Mean-center the given covariate columns."""
        cov = np.array(self.covariates, copy=True)
        for j in columns:
            cov[:, j] -= cov[:, j].mean()
        return self.with_covariates(cov)


class LatentDataset(Dataset):
    """Simulated data with error-free covariates and the true cure status."""

    cured: np.ndarray

    @field_validator("cured", mode="before")
    @classmethod
    def validate_cured(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, dtype=bool, ndim=1)


# ============================================================================
# Covariate layout
# ============================================================================


class ModelLayout(_ArrayModel):
    """
    Which covariate columns enter incidence (X) and latency (Z).

    ``error_cov`` is the D x D measurement error covariance V; rows and
    columns of error-free covariates are zero. The two index sets may
    overlap (covariates shared by both submodels).
    """

    incidence_idx: tuple[int, ...] = ()
    latency_idx: tuple[int, ...] = ()
    error_cov: np.ndarray

    @field_validator("error_cov", mode="before")
    @classmethod
    def validate_error_cov(cls, v: Any) -> np.ndarray:
        arr = _frozen_array(v, ndim=2)
        if arr.shape[0] != arr.shape[1]:
            raise InvalidArgumentError("error covariance must be square", "error_cov")
        if not np.allclose(arr, arr.T, atol=1e-12):
            raise InvalidArgumentError(
                "error covariance must be symmetric", "error_cov"
            )
        if arr.size and np.linalg.eigvalsh(arr).min() < -PSD_TOLERANCE:
            raise InvalidArgumentError(
                "error covariance must be positive semidefinite", "error_cov"
            )
        return arr

    @model_validator(mode="after")
    def validate_indices(self) -> "ModelLayout":
        dim = self.error_cov.shape[0]
        for name in ("incidence_idx", "latency_idx"):
            idx = getattr(self, name)
            if len(set(idx)) != len(idx):
                raise InvalidArgumentError(f"{name} has duplicate columns", name)
            if any(j < 0 or j >= dim for j in idx):
                raise InvalidArgumentError(f"{name} out of range for D={dim}", name)
        return self

    @classmethod
    def from_error_sd(
        cls,
        incidence_idx: Sequence[int],
        latency_idx: Sequence[int],
        error_sd: Sequence[float],
    ) -> "ModelLayout":
        """Layout with diagonal V = diag(sd^2)."""
        sd = np.asarray(error_sd, dtype=float)
        if np.any(sd < 0):
            raise InvalidArgumentError(
                "error standard deviations must be >= 0", "error_sd"
            )
        return cls(
            incidence_idx=tuple(incidence_idx),
            latency_idx=tuple(latency_idx),
            error_cov=np.diag(sd**2),
        )

    @property
    def dim(self) -> int:
        return int(self.error_cov.shape[0])

    @property
    def p(self) -> int:
        """Incidence dimension including the intercept."""
        return len(self.incidence_idx) + 1

    @property
    def q(self) -> int:
        return len(self.latency_idx)

    @property
    def mismeasured_columns(self) -> tuple[int, ...]:
        rows = np.any(self.error_cov != 0, axis=1)
        return tuple(int(j) for j in np.flatnonzero(rows))

    def with_error_cov(self, error_cov: np.ndarray) -> "ModelLayout":
        return ModelLayout(
            incidence_idx=self.incidence_idx,
            latency_idx=self.latency_idx,
            error_cov=error_cov,
        )

    def parameter_names(self, column_names: Sequence[str]) -> list[str]:
        """Labels of the stacked (gamma, beta) vector."""
        gamma = ["gamma:intercept"]
        gamma += [f"gamma:{column_names[j]}" for j in self.incidence_idx]
        beta = [f"beta:{column_names[j]}" for j in self.latency_idx]
        return gamma + beta


# ============================================================================
# Step functions and fits
# ============================================================================


class StepFunction(_ArrayModel):
    """
    Right-continuous step function.

    The value at t is the value attached to the largest jump time <= t, or
    ``value_before_first`` when t precedes every jump time.
    """

    times: np.ndarray
    values: np.ndarray
    value_before_first: float = 0.0

    @field_validator("times", "values", mode="before")
    @classmethod
    def validate_arrays(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, ndim=1)

    @model_validator(mode="after")
    def validate_grid(self) -> "StepFunction":
        if self.times.shape != self.values.shape:
            raise InvalidArgumentError(
                "step function times and values differ in length"
            )
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise InvalidArgumentError(
                "step function times must be strictly increasing"
            )
        return self

    def __call__(self, t: Any) -> Any:
        t_arr = np.asarray(t, dtype=float)
        pos = np.searchsorted(self.times, t_arr, side="right") - 1
        padded = np.concatenate([[self.value_before_first], self.values])
        out = padded[pos + 1]
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t: Any) -> Any:
        """Value just before t."""
        t_arr = np.asarray(t, dtype=float)
        pos = np.searchsorted(self.times, t_arr, side="left") - 1
        padded = np.concatenate([[self.value_before_first], self.values])
        out = padded[pos + 1]
        return float(out) if out.ndim == 0 else out

    @property
    def jumps(self) -> np.ndarray:
        """Jump sizes at ``times``."""
        return np.diff(np.concatenate([[self.value_before_first], self.values]))

    @property
    def is_monotone(self) -> bool:
        """True when the function is non-decreasing."""
        return bool(np.all(self.jumps >= 0))

    def to_rows(self) -> list[dict[str, float]]:
        return [
            {"t": float(t), "value": float(v)} for t, v in zip(self.times, self.values)
        ]


class CureFit(_ArrayModel):
    """Fitted logistic/Cox mixture cure model."""

    gamma: np.ndarray = Field(description="Incidence coefficients, index 0 = intercept")
    beta: np.ndarray = Field(description="Latency coefficients")
    baseline: StepFunction = Field(
        description="Baseline cumulative hazard on [0, tau0]"
    )
    tau0: float
    loglik: float = float("nan")
    converged: bool = True
    iterations: int = 0
    incidence_diverged: bool = False
    latency_diverged: bool = False
    loglik_trace: tuple[float, ...] = ()
    ascent_violations: int = Field(
        default=0, ge=0, description="EM iterations that lowered the log-likelihood"
    )
    method: Optional[str] = None
    bandwidth: Optional[float] = None

    @field_validator("gamma", "beta", mode="before")
    @classmethod
    def validate_coefficients(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, ndim=1)

    @model_validator(mode="after")
    def validate_baseline(self) -> "CureFit":
        # Non-finite fits are rejected by the estimators through is_finite
        baseline = self.baseline
        if not np.all(np.isfinite(baseline.values)):
            return self
        if baseline.value_before_first != 0 or not baseline.is_monotone:
            raise InvalidArgumentError(
                "baseline cumulative hazard must start at 0 and be non-decreasing",
                "baseline",
            )
        if baseline.times.size and baseline.times[0] <= 0 and baseline.values[0] != 0:
            raise InvalidArgumentError("baseline must vanish at t = 0", "baseline")
        return self

    @property
    def params(self) -> np.ndarray:
        """Stacked (gamma, beta) vector."""
        return np.concatenate([self.gamma, self.beta])

    @property
    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.params))
            and np.all(np.isfinite(self.baseline.values))
        )

    def replace(self, **changes: Any) -> "CureFit":
        return CureFit(**{**dict(self), **changes})

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "gamma": self.gamma.tolist(),
            "beta": self.beta.tolist(),
            "baseline": self.baseline.to_rows(),
            "tau0": self.tau0,
            "converged": self.converged,
            "iterations": self.iterations,
            "loglik": self.loglik,
            "incidence_diverged": self.incidence_diverged,
            "latency_diverged": self.latency_diverged,
            "ascent_violations": self.ascent_violations,
            "bandwidth": self.bandwidth,
        }
