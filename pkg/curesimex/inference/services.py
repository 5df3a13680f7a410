"""
Inference Services

Case-resampling bootstrap standard deviations, two-sided Wald p-values and
cure probability tables for covariate profiles.
"""

from collections.abc import Mapping, Sequence
from functools import partial
from typing import Any, Optional, Protocol

import numpy as np
from scipy import stats

from curesimex.core.config import get_settings
from curesimex.core.exceptions import FailureThresholdError, InvalidArgumentError
from curesimex.core.logging import get_context_logger, get_logger, log_performance
from curesimex.core.parallel import ordered_map
from curesimex.core.random import child_seed, substream
from curesimex.em.constants import EstimatorName
from curesimex.em.schemas import EmOptions
from curesimex.inference.schemas import BootstrapReport, CureProbabilityRow
from curesimex.model.schemas import CureFit, Dataset, ModelLayout
from curesimex.model.services import cure_probability
from curesimex.presmooth.schemas import PresmoothOptions
from curesimex.simex.fitters import CureFitter, make_fitter
from curesimex.simex.schemas import SimexOptions
from curesimex.simex.services import CELL_ERRORS, run_simex


logger = get_logger(__name__)


class ParameterFitter(Protocol):
    """Any estimator mapping a dataset to a parameter vector."""

    def __call__(self, data: Dataset, layout: ModelLayout, seed: int) -> np.ndarray: ...


# ============================================================================
# Fitter adapters
# ============================================================================


def _cure_fit_params(
    fitter: CureFitter, data: Dataset, layout: ModelLayout, seed: int
) -> np.ndarray:
    return fitter(data, layout).params


def cure_fit_parameters(fitter: CureFitter) -> ParameterFitter:
    """Stacked (gamma, beta) of a cure model fitter; the seed is unused."""
    return partial(_cure_fit_params, fitter)


class EstimatorPipeline:
    """
    Naive or SIMEX-corrected estimator rebuilt on every dataset it sees.

    The presmoothing bandwidth is reselected on each resample, and a SIMEX
    run draws its noise from the seed it is given.
    """

    def __init__(
        self,
        method: EstimatorName | str,
        simex: Optional[SimexOptions] = None,
        em: Optional[EmOptions] = None,
        presmooth: Optional[PresmoothOptions] = None,
    ) -> None:
        self.method = EstimatorName(method)
        self.simex = simex
        self.em = em
        self.presmooth = presmooth

    def __call__(self, data: Dataset, layout: ModelLayout, seed: int) -> np.ndarray:
        fitter = make_fitter(
            self.method, data, layout, em=self.em, presmooth=self.presmooth
        )
        if self.simex is None:
            return fitter(data, layout).params
        opts = self.simex.model_copy(update={"seed": seed, "jobs": 1})
        return run_simex(data, layout, fitter, opts, method=self.method.value).params


# ============================================================================
# Bootstrap
# ============================================================================


def _resample_fit(
    data: Dataset, layout: ModelLayout, fitter: ParameterFitter, seed: int, b: int
) -> tuple[Optional[np.ndarray], Optional[str]]:
    rows = substream(seed, b).integers(0, data.n, size=data.n)
    try:
        params = fitter(data.subset(rows), layout, child_seed(seed, b, 1))
        params = np.asarray(params, dtype=float)
    except CELL_ERRORS as e:
        return None, f"{type(e).__name__}: {e}"
    if not np.all(np.isfinite(params)):
        return None, "non-finite parameters"
    return params, None


@log_performance(threshold_ms=3_600_000.0)
def bootstrap_sd(
    data: Dataset,
    layout: ModelLayout,
    fitter: ParameterFitter,
    n_boot: Optional[int] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = 1,
    names: Optional[Sequence[str]] = None,
    failure_threshold: Optional[float] = None,
) -> BootstrapReport:
    """
    Bootstrap standard deviations of ``fitter`` by resampling whole records.

    Resample b draws its record indices from the substream (seed, b) and
    hands the fitter the child seed of (seed, b, 1). Failed refits are
    dropped and counted; the sd uses denominator (successes - 1).
    """
    settings = get_settings()
    n_boot = settings.bootstrap_n_boot if n_boot is None else n_boot
    seed = settings.default_seed if seed is None else seed
    threshold = failure_threshold
    if threshold is None:
        threshold = settings.bootstrap_failure_threshold
    if n_boot < 2:
        raise InvalidArgumentError("n_boot must be at least 2", "n_boot")

    estimates = np.asarray(fitter(data, layout, seed), dtype=float)
    logger.info(f"Bootstrap: {n_boot} resamples of {data.n} records")
    outcomes = ordered_map(
        partial(_resample_fit, data, layout, fitter, seed), range(n_boot), jobs=jobs
    )

    draws = []
    failed = 0
    for b, (params, error) in enumerate(outcomes):
        if params is None:
            failed += 1
            get_context_logger(__name__, seed=seed, replicate=b).warning(
                f"Dropped bootstrap resample: {error}"
            )
        else:
            draws.append(params)
    if failed > threshold * n_boot or len(draws) < 2:
        logger.error(f"Bootstrap aborted: {failed}/{n_boot} resamples failed")
        raise FailureThresholdError("bootstrap", failed, n_boot, threshold)

    sd = np.std(np.stack(draws), axis=0, ddof=1)
    return BootstrapReport(
        estimates=estimates,
        sd=sd,
        p_values=wald_pvalues(estimates, sd),
        n_boot=n_boot,
        n_failed=failed,
        names=tuple(names) if names is not None else None,
    )


# ============================================================================
# Wald tests and cure tables
# ============================================================================


def wald_pvalues(estimates: Any, sd: Any) -> np.ndarray:
    """
    Two-sided normal p-values 2 (1 - Phi(|est| / sd)).

    A zero sd gives p = 1 for a zero estimate and p = 0 otherwise.
    """
    est = np.asarray(estimates, dtype=float).reshape(-1)
    sd = np.asarray(sd, dtype=float).reshape(-1)
    if est.shape != sd.shape:
        raise InvalidArgumentError("estimates and sd must have the same length", "sd")
    if np.any(sd < 0):
        raise InvalidArgumentError("standard deviations must be >= 0", "sd")

    positive = sd > 0
    z = np.abs(est) / np.where(positive, sd, 1.0)
    return np.where(positive, 2.0 * stats.norm.sf(z), np.where(est == 0, 1.0, 0.0))


def cure_probability_table(
    fit: CureFit, profiles: Mapping[str, Sequence[float]]
) -> list[CureProbabilityRow]:
    """Cure probabilities for named incidence covariate profiles (no intercept)."""
    rows = []
    for name, x in profiles.items():
        design = np.concatenate([[1.0], np.asarray(x, dtype=float)])
        rows.append(
            CureProbabilityRow(
                profile=name,
                covariates=tuple(float(v) for v in x),
                cure_probability=float(cure_probability(fit, design)),
            )
        )
    return rows
