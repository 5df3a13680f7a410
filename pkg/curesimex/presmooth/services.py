"""
Presmoothing Estimator Services

Alternative to the EM maximum likelihood fit. A kernel-weighted
product-limit (Beran) estimator gives nonparametric uncure probabilities
at tau0; the incidence is fitted to them by a Bernoulli quasi-likelihood
that ignores the Cox model, and the latency follows from the EM loop with
the incidence frozen.
"""

from collections.abc import Sequence
from typing import Any, Optional

import numpy as np

from curesimex.core.exceptions import InvalidArgumentError
from curesimex.core.logging import get_logger
from curesimex.em.constants import EstimatorName
from curesimex.em.schemas import UncureWeights
from curesimex.em.services import (
    fit_latency_given_incidence,
    m_step_incidence,
    resolve_tau0,
)
from curesimex.model.schemas import CureFit, Dataset, ModelLayout, StepFunction
from curesimex.presmooth.constants import (
    BANDWIDTH_CAP,
    CV_FLAT_TOL,
    CV_TIME_POINTS,
    DISCRETE_MAX_LEVELS,
    UNCURE_CLAMP,
    KernelFamily,
)
from curesimex.presmooth.exceptions import DegenerateWindowError
from curesimex.presmooth.kernels import kernel_weights
from curesimex.presmooth.schemas import PresmoothOptions


logger = get_logger(__name__)


# ============================================================================
# Covariate roles
# ============================================================================


class SmoothingDesign:
    """
    Smoothing coordinate and exact-match groups of a dataset.

    The continuous covariate is optionally standardized with the dataset's
    own mean and standard deviation; discrete covariates split the records
    into groups that never borrow strength from each other.
    """

    def __init__(
        self,
        data: Dataset,
        column: int,
        discrete: tuple[int, ...] = (),
        standardize: bool = True,
    ) -> None:
        raw = data.covariates[:, column]
        self.center = float(raw.mean()) if standardize else 0.0
        sd = float(raw.std()) if standardize else 1.0
        self.scale = sd if sd > 0 else 1.0
        self.raw = raw
        self.u = (raw - self.center) / self.scale
        self.discrete = discrete
        self.groups = (
            data.covariates[:, list(discrete)] if discrete else np.zeros((data.n, 0))
        )

    @classmethod
    def from_layout(
        cls, data: Dataset, layout: ModelLayout, standardize: bool = True
    ) -> "SmoothingDesign":
        continuous, discrete = incidence_roles(data, layout)
        return cls(data, continuous, discrete, standardize)

    def to_standard(self, x0: Any) -> np.ndarray:
        return (np.atleast_1d(np.asarray(x0, dtype=float)) - self.center) / self.scale

    def same_group(self, rows: np.ndarray) -> np.ndarray:
        """Boolean matrix: record j shares every discrete value with record i."""
        if not self.discrete:
            return np.ones((rows.size, self.u.size), dtype=bool)
        g = self.groups
        return np.all(g[rows][:, None, :] == g[None, :, :], axis=2)

    def matching(self, values: Optional[Sequence[float]]) -> np.ndarray:
        """Row mask (1 x n) of records whose discrete covariates equal ``values``."""
        given = () if values is None else tuple(float(v) for v in values)
        if len(given) != len(self.discrete):
            raise InvalidArgumentError(
                f"expected {len(self.discrete)} discrete covariate values, "
                f"got {len(given)}",
                "group",
            )
        if not self.discrete:
            return np.ones((1, self.u.size), dtype=bool)
        return np.all(self.groups == np.asarray(given)[None, :], axis=1)[None, :]


def incidence_roles(data: Dataset, layout: ModelLayout) -> tuple[int, tuple[int, ...]]:
    """Split incidence columns into the single continuous one and discrete ones."""
    continuous = []
    discrete = []
    for j in layout.incidence_idx:
        levels = np.unique(data.covariates[:, j]).size
        (discrete if levels <= DISCRETE_MAX_LEVELS else continuous).append(j)
    if len(continuous) != 1:
        raise InvalidArgumentError(
            f"presmoothing needs exactly one continuous incidence covariate, "
            f"found {len(continuous)}",
            "incidence_idx",
        )
    return continuous[0], tuple(discrete)


# ============================================================================
# Beran estimator
# ============================================================================


def _beran_factors(
    times: np.ndarray, status: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Distinct event times and per-row conditional survival factors."""
    order = np.argsort(times, kind="stable")
    y = times[order]
    d = status[order]
    w = weights[:, order]
    event_times = np.unique(y[d == 1])
    first = np.searchsorted(y, event_times, side="left")
    at_risk = np.cumsum(w[:, ::-1], axis=1)[:, ::-1][:, first]

    is_event = (d == 1)[:, None] & (y[:, None] == event_times[None, :])
    died = w @ is_event.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        hazard = np.where(at_risk > 0, died / at_risk, 0.0)
    return event_times, 1.0 - hazard


def _window_weights(
    design: SmoothingDesign,
    x0: np.ndarray,
    bandwidth: float,
    kernel: KernelFamily,
    mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    weights = kernel_weights(design.u, design.to_standard(x0), bandwidth, kernel)
    if mask is not None:
        weights = weights * mask
    totals = weights.sum(axis=1)
    empty = np.flatnonzero(totals <= 0)
    if empty.size:
        raise DegenerateWindowError(float(np.atleast_1d(x0)[empty[0]]), bandwidth)
    return weights


def beran_curve(
    data: Dataset,
    x0: float,
    h: float,
    column: int = 0,
    kernel: KernelFamily = KernelFamily.EPANECHNIKOV,
    standardize: bool = True,
    layout: Optional[ModelLayout] = None,
    group: Optional[Sequence[float]] = None,
) -> StepFunction:
    """
    Conditional survival curve S(. | x0) as a step function.

    With ``layout`` the smoothing coordinate is its continuous incidence
    covariate and only records whose discrete incidence covariates equal
    ``group`` (in layout order) enter the window.
    """
    if not h > 0:
        raise InvalidArgumentError("bandwidth must be positive", "h")
    if layout is None:
        design = SmoothingDesign(data, column, standardize=standardize)
    else:
        design = SmoothingDesign.from_layout(data, layout, standardize)
    mask = design.matching(group)
    weights = _window_weights(design, np.asarray([x0]), h, kernel, mask=mask)
    event_times, factors = _beran_factors(data.times, data.status, weights)
    return StepFunction(
        times=event_times, values=np.cumprod(factors[0]), value_before_first=1.0
    )


def beran_survival(
    data: Dataset,
    x0: float,
    t: float,
    h: float,
    column: int = 0,
    kernel: KernelFamily = KernelFamily.EPANECHNIKOV,
    standardize: bool = True,
    layout: Optional[ModelLayout] = None,
    group: Optional[Sequence[float]] = None,
) -> float:
    """Beran estimate of P(T > t | X = x0), within ``group`` when given."""
    curve = beran_curve(data, x0, h, column, kernel, standardize, layout, group)
    return float(curve(t))


def presmoothed_uncure_probabilities(
    data: Dataset,
    layout: ModelLayout,
    bandwidth: float,
    kernel: KernelFamily = KernelFamily.EPANECHNIKOV,
    standardize: bool = True,
    tau0: Optional[float] = None,
) -> np.ndarray:
    """1 - Beran survival at tau0 for every record, clamped away from 0 and 1."""
    design = SmoothingDesign.from_layout(data, layout, standardize)
    tau0 = data.last_event_time if tau0 is None else tau0
    mask = design.same_group(np.arange(data.n))
    weights = _window_weights(design, design.raw, bandwidth, kernel, mask=mask)
    event_times, factors = _beran_factors(data.times, data.status, weights)
    survival = np.prod(factors[:, event_times <= tau0], axis=1)
    return np.clip(1.0 - survival, UNCURE_CLAMP, 1.0 - UNCURE_CLAMP)


# ============================================================================
# Bandwidth selection
# ============================================================================


def _cv_criterion(
    design: SmoothingDesign,
    indicator: np.ndarray,
    bandwidth: float,
    kernel: KernelFamily,
    same_group: np.ndarray,
) -> float:
    weights = kernel_weights(design.u, design.u, bandwidth, kernel) * same_group
    np.fill_diagonal(weights, 0.0)
    totals = weights.sum(axis=1)
    if np.any(totals <= 0):
        return float("inf")
    fitted = weights @ indicator / totals[:, None]
    return float(np.mean((indicator - fitted) ** 2))


def cv_bandwidth(
    data: Dataset,
    grid: tuple[float, ...] | list[float],
    layout: Optional[ModelLayout] = None,
    kernel: KernelFamily = KernelFamily.EPANECHNIKOV,
    standardize: bool = True,
) -> float:
    """
    Leave-one-out cross-validated bandwidth for H(t | x) = P(Y <= t | x).

    The criterion is the mean squared difference between 1{Y_i <= t} and the
    leave-one-out Nadaraya-Watson estimate at x_i, over 50 time points up to
    the largest uncensored follow-up time. Bandwidths leaving some record
    with an empty window are not eligible. Candidates are capped at 2.
    """
    if len(grid) == 0:
        raise InvalidArgumentError("bandwidth grid must not be empty", "grid")
    candidates = sorted({min(float(h), BANDWIDTH_CAP) for h in grid})
    if len(candidates) == 1:
        return candidates[0]

    if layout is None:
        design = SmoothingDesign(data, 0, standardize=standardize)
    else:
        design = SmoothingDesign.from_layout(data, layout, standardize)
    t_grid = np.linspace(data.times.min(), data.last_event_time, CV_TIME_POINTS)
    indicator = (data.times[:, None] <= t_grid[None, :]).astype(float)
    same_group = design.same_group(np.arange(data.n))

    scores = np.array(
        [_cv_criterion(design, indicator, h, kernel, same_group) for h in candidates]
    )
    finite = np.isfinite(scores)
    if not np.any(finite):
        logger.debug("No bandwidth gives every record a neighbour; using the largest")
        return candidates[-1]
    if np.ptp(scores[finite]) <= CV_FLAT_TOL and np.all(finite):
        return candidates[(len(candidates) - 1) // 2]
    best = candidates[int(np.argmin(np.where(finite, scores, np.inf)))]
    logger.debug(f"Cross-validated bandwidth {best} from {len(candidates)} candidates")
    return best


# ============================================================================
# Presmoothing fit
# ============================================================================


def select_bandwidth(
    data: Dataset, layout: ModelLayout, opts: PresmoothOptions
) -> float:
    """The fixed bandwidth, or the cross-validated one on ``data``."""
    if opts.bandwidth is not None:
        return opts.bandwidth
    return cv_bandwidth(
        data,
        opts.bandwidth_grid,
        layout,
        kernel=opts.kernel,
        standardize=opts.standardize,
    )


def fit_presmooth(
    data: Dataset,
    layout: ModelLayout,
    opts: Optional[PresmoothOptions] = None,
    uncure: Optional[np.ndarray] = None,
) -> CureFit:
    """
    Presmoothing fit of the mixture cure model.

    ``uncure`` replaces the Beran-based uncure probabilities when given;
    no smoothing covariate is needed in that case.
    """
    opts = opts or PresmoothOptions()
    tau0 = resolve_tau0(data, opts.em)
    bandwidth = opts.bandwidth
    if uncure is None:
        bandwidth = select_bandwidth(data, layout, opts)
        uncure = presmoothed_uncure_probabilities(
            data, layout, bandwidth, opts.kernel, opts.standardize, tau0
        )
    else:
        uncure = np.clip(
            np.asarray(uncure, dtype=float), UNCURE_CLAMP, 1.0 - UNCURE_CLAMP
        )
        if uncure.shape != (data.n,):
            raise InvalidArgumentError(
                "one uncure probability per record is required", "uncure"
            )

    incidence = m_step_incidence(data, layout, UncureWeights(w=uncure), opts=opts.em)
    fit = fit_latency_given_incidence(
        data, layout, incidence.gamma, opts.em, method=EstimatorName.PRESMOOTH.value
    )
    return fit.replace(
        incidence_diverged=fit.incidence_diverged or incidence.diverged,
        bandwidth=bandwidth,
    )
