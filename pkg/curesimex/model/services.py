"""
Mixture Cure Model Quantities

Closed-form pieces of the logistic/Cox mixture cure model:

- logistic incidence phi(gamma, x)
- Cox latency survival S_u(t | z)
- population survival 1 - phi + phi * S_u
- cure probabilities
- Kaplan-Meier product-limit curves for exploration
"""

from typing import Any

import numpy as np
from scipy.special import expit

from curesimex.core.constants import PROB_CLAMP
from curesimex.core.exceptions import InvalidArgumentError
from curesimex.core.logging import get_logger
from curesimex.model.schemas import CureFit, Dataset, StepFunction


logger = get_logger(__name__)


def _check_design(coef: np.ndarray, design: np.ndarray, name: str) -> None:
    if design.shape[-1] != coef.shape[0]:
        raise InvalidArgumentError(
            f"{name} has {design.shape[-1]} columns, coefficients have {coef.shape[0]}",
            name,
        )


def _scalar_or_array(value: np.ndarray) -> Any:
    return float(value) if np.ndim(value) == 0 else value


# ============================================================================
# Incidence and latency
# ============================================================================


def phi_logistic(gamma: Any, x: Any) -> Any:
    """
    Uncure probability e^{gamma'x} / (1 + e^{gamma'x}).

    ``x`` is a design vector with the leading 1, or a matrix of such rows.
    Saturates without overflow for any finite linear predictor.
    """
    gamma = np.asarray(gamma, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_design(gamma, x, "x")
    return _scalar_or_array(expit(x @ gamma))


def clamp_probability(p: Any) -> Any:
    """Clamp probabilities away from 0 and 1 for likelihood evaluation."""
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def cox_survival(beta: Any, baseline: StepFunction, t: Any, z: Any) -> Any:
    """Latency survival exp(-Lambda(t) * e^{beta'z})."""
    beta = np.asarray(beta, dtype=float)
    z = np.asarray(z, dtype=float)
    _check_design(beta, z, "z")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidArgumentError("time must be >= 0", "t")
    return _scalar_or_array(np.exp(-np.asarray(baseline(t_arr)) * np.exp(z @ beta)))


def population_survival(fit: CureFit, t: Any, x: Any, z: Any) -> Any:
    """Population survival 1 - phi + phi * S_u(t | z)."""
    phi = np.asarray(phi_logistic(fit.gamma, x))
    su = np.asarray(cox_survival(fit.beta, fit.baseline, t, z))
    return _scalar_or_array(1.0 - phi + phi * su)


def cure_probability(fit: CureFit, x: Any) -> Any:
    """Cure probability 1 - phi(gamma, x)."""
    return _scalar_or_array(1.0 - np.asarray(phi_logistic(fit.gamma, x)))


# ============================================================================
# Kaplan-Meier
# ============================================================================


def _product_limit(times: np.ndarray, status: np.ndarray) -> StepFunction:
    event_times, deaths = np.unique(times[status == 1], return_counts=True)
    sorted_times = np.sort(times)
    # Records censored at an event time stay in that event's risk set
    at_risk = times.size - np.searchsorted(sorted_times, event_times, side="left")
    survival = np.cumprod(1.0 - deaths / at_risk)
    return StepFunction(times=event_times, values=survival, value_before_first=1.0)


def kaplan_meier(data: Dataset) -> StepFunction:
    """Product-limit estimate of the marginal survival function."""
    if data.n == 0:
        raise InvalidArgumentError("Kaplan-Meier needs at least one record", "data")
    return _product_limit(data.times, data.status)


def kaplan_meier_by_group(
    data: Dataset, column: int | str
) -> dict[float, StepFunction]:
    """Kaplan-Meier curves per distinct value of a grouping covariate."""
    if isinstance(column, str):
        if column not in data.column_names:
            raise InvalidArgumentError(f"unknown column {column!r}", "column")
        column = data.column_names.index(column)
    if not 0 <= column < data.dim:
        raise InvalidArgumentError(f"column {column} out of range", "column")

    groups = data.covariates[:, column]
    curves: dict[float, StepFunction] = {}
    for level in np.unique(groups):
        mask = groups == level
        curves[float(level)] = _product_limit(data.times[mask], data.status[mask])
    logger.debug(f"Kaplan-Meier by column {column}: {len(curves)} groups")
    return curves


def plateau_fraction(data: Dataset) -> float:
    """Fraction of records followed beyond the last observed event time."""
    return float(np.mean(data.times > data.last_event_time))


