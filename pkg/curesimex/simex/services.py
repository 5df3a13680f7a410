"""
SIMEX Engine Services

Simulation-extrapolation around any cure model fitter:

1. contaminate the covariates with extra Gaussian noise (lambda V)^{1/2} U
   at every level lambda, B times each, and refit;
2. average the B fits per level;
3. fit a polynomial extrapolant per parameter and per baseline jump time
   and evaluate it at lambda = -1;
4. repair a non-monotone extrapolated baseline by isotonic regression.
"""

from collections.abc import Sequence
from functools import partial
from typing import Any, Optional

import numpy as np
from numpy.polynomial import polynomial
from scipy import linalg
from scipy.optimize import isotonic_regression

from curesimex.core.constants import PSD_TOLERANCE
from curesimex.core.exceptions import (
    CureSimexError,
    FailureThresholdError,
    InvalidArgumentError,
)
from curesimex.core.logging import get_context_logger, get_logger, log_performance
from curesimex.core.parallel import ordered_map
from curesimex.core.random import substream
from curesimex.model.schemas import CureFit, Dataset, ModelLayout, StepFunction
from curesimex.simex.constants import EXTRAPOLATION_POINT, Extrapolant
from curesimex.simex.fitters import CureFitter
from curesimex.simex.schemas import AveragedFit, SimexOptions, SimexResult


logger = get_logger(__name__)

# Errors a single contaminated fit may raise without aborting the run
CELL_ERRORS = (CureSimexError, np.linalg.LinAlgError, ArithmeticError, ValueError)


# ============================================================================
# Step 1: contamination
# ============================================================================


def error_root(error_cov: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD error covariance."""
    v = np.asarray(error_cov, dtype=float)
    eigvals, eigvecs = linalg.eigh(v)
    if eigvals.size and eigvals.min() < -PSD_TOLERANCE:
        raise InvalidArgumentError(
            f"error covariance has eigenvalue {eigvals.min():.3g} < 0", "error_cov"
        )
    root = (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
    error_free = ~np.any(v != 0, axis=1)
    root[error_free, :] = 0.0
    root[:, error_free] = 0.0
    return root


def contaminate(
    data: Dataset, error_cov: np.ndarray, lam: float, rng: np.random.Generator
) -> Dataset:
    """Add (lambda V)^{1/2} N(0, I) noise to every covariate vector."""
    if lam < 0:
        raise InvalidArgumentError("lambda must be >= 0", "lambda")
    root = error_root(error_cov)
    if root.shape != (data.dim, data.dim):
        raise InvalidArgumentError(
            f"error covariance is {root.shape}, dataset has {data.dim} covariates",
            "error_cov",
        )
    if lam == 0:
        return data
    noise = rng.standard_normal((data.n, data.dim)) @ (np.sqrt(lam) * root).T
    return data.with_covariates(data.covariates + noise)


# ============================================================================
# Step 2: averaging and extrapolation
# ============================================================================


def average_fits(
    fits: Sequence[CureFit], lam: float = 0.0, n_failed: int = 0
) -> AveragedFit:
    """Coordinatewise means of fits sharing dimensions and baseline grid."""
    if not fits:
        raise InvalidArgumentError("nothing to average", "fits")
    first = fits[0]
    for fit in fits[1:]:
        if fit.gamma.shape != first.gamma.shape or fit.beta.shape != first.beta.shape:
            raise InvalidArgumentError(
                "fits have different parameter dimensions", "fits"
            )
        if not np.array_equal(fit.baseline.times, first.baseline.times):
            raise InvalidArgumentError("fits have different baseline grids", "fits")

    return AveragedFit(
        lam=lam,
        gamma_bar=np.mean(np.stack([f.gamma for f in fits]), axis=0),
        beta_bar=np.mean(np.stack([f.beta for f in fits]), axis=0),
        lambda_bar=StepFunction(
            times=first.baseline.times,
            values=np.mean(np.stack([f.baseline.values for f in fits]), axis=0),
            value_before_first=0.0,
        ),
        tau0=first.tau0,
        n_fits=len(fits),
        n_failed=n_failed,
    )


def fit_extrapolant(
    lambdas: Sequence[float], values: Any, kind: Extrapolant = Extrapolant.QUADRATIC
) -> np.ndarray:
    """
    Least-squares polynomial coefficients (a1, a2, ...) in increasing powers.

    ``values`` holds one row per lambda; extra columns are fitted jointly.
    Solved through a QR factorization of the Vandermonde matrix.
    """
    kind = Extrapolant(kind)
    lam = np.asarray(lambdas, dtype=float)
    y = np.asarray(values, dtype=float)
    if y.shape[0] != lam.size:
        raise InvalidArgumentError("one value row per lambda is required", "values")
    if np.unique(lam).size != lam.size:
        raise InvalidArgumentError("lambdas must be distinct", "lambdas")
    if lam.size < kind.degree + 1:
        raise InvalidArgumentError(
            f"{kind.value} extrapolant needs {kind.degree + 1} lambdas, got {lam.size}",
            "lambdas",
        )

    vander = np.vander(lam, kind.degree + 1, increasing=True)
    q, r = linalg.qr(vander, mode="economic")
    return linalg.solve_triangular(r, q.T @ y)


def extrapolate_minus1(coeffs: Any, kind: Optional[Extrapolant] = None) -> Any:
    """Evaluate the extrapolant at lambda = -1."""
    c = np.asarray(coeffs, dtype=float)
    if kind is not None and c.shape[0] > Extrapolant(kind).degree + 1:
        raise InvalidArgumentError(
            "more coefficients than the extrapolant degree allows"
        )
    value = polynomial.polyval(EXTRAPOLATION_POINT, c)
    return float(value) if np.ndim(value) == 0 else value


def pava(values: Sequence[float]) -> np.ndarray:
    """Non-decreasing least-squares fit (pool adjacent violators)."""
    y = np.asarray(values, dtype=float)
    if y.size == 0:
        raise InvalidArgumentError("pava needs at least one value", "values")
    return np.asarray(isotonic_regression(y, increasing=True).x)


def _at_minus1(coeffs: np.ndarray) -> np.ndarray:
    return np.asarray(extrapolate_minus1(coeffs), dtype=float).reshape(-1)


def extrapolate_fits(
    per_lambda: Sequence[AveragedFit], opts: SimexOptions, method: Optional[str] = None
) -> SimexResult:
    """Extrapolate the averaged fits to lambda = -1."""
    kind = opts.extrapolant
    lambdas = [avg.lam for avg in per_lambda]
    gammas = np.stack([avg.gamma_bar for avg in per_lambda])
    betas = np.stack([avg.beta_bar for avg in per_lambda])
    grid = per_lambda[0].lambda_bar.times
    if any(not np.array_equal(avg.lambda_bar.times, grid) for avg in per_lambda):
        raise InvalidArgumentError(
            "averaged baselines have different grids", "per_lambda"
        )
    baselines = np.stack([avg.lambda_bar.values for avg in per_lambda])

    gamma_coeffs = fit_extrapolant(lambdas, gammas, kind)
    beta_coeffs = fit_extrapolant(lambdas, betas, kind)
    baseline_coeffs = fit_extrapolant(lambdas, baselines, kind)

    raw = _at_minus1(baseline_coeffs)
    monotone = bool(np.all(np.diff(raw) >= 0) and (raw.size == 0 or raw[0] >= 0))
    values = raw
    if opts.isotonize and not monotone:
        logger.info("Extrapolated baseline is not monotone; isotonizing")
        values = np.maximum(pava(raw), 0.0)

    return SimexResult(
        per_lambda=tuple(per_lambda),
        extrapolant=kind,
        gamma_coeffs=gamma_coeffs.T,
        beta_coeffs=beta_coeffs.T,
        baseline_coeffs=baseline_coeffs.T,
        gamma_simex=_at_minus1(gamma_coeffs),
        beta_simex=_at_minus1(beta_coeffs),
        baseline_simex=StepFunction(times=grid, values=values, value_before_first=0.0),
        baseline_was_monotone=monotone,
        tau0=per_lambda[0].tau0,
        method=method,
    )


# ============================================================================
# End-to-end run
# ============================================================================


def _simex_cell(
    data: Dataset,
    layout: ModelLayout,
    fitter: CureFitter,
    seed: int,
    cell: tuple[int, float, int],
) -> tuple[Optional[CureFit], Optional[str]]:
    k, lam, b = cell
    try:
        contaminated = contaminate(data, layout.error_cov, lam, substream(seed, k, b))
        fit = fitter(contaminated, layout)
    except CELL_ERRORS as e:
        return None, f"{type(e).__name__}: {e}"
    if not fit.is_finite:
        return None, "non-finite parameters"
    return fit, None


@log_performance(threshold_ms=600_000.0)
def run_simex(
    data: Dataset,
    layout: ModelLayout,
    fitter: CureFitter,
    opts: Optional[SimexOptions] = None,
    method: Optional[str] = None,
) -> SimexResult:
    """
    Full SIMEX correction of ``fitter`` on ``data``.

    Cell (lambda index k, replicate b) draws its noise from the substream
    keyed (k, b) of ``opts.seed``. A lambda = 0 level is fitted once. Cells
    whose fit raises or returns non-finite parameters are dropped; more than
    ``opts.failure_threshold`` dropped cells at any level aborts the run.
    """
    opts = opts or SimexOptions()
    if not np.any(layout.error_cov != 0):
        logger.warning("Error covariance is zero; SIMEX reproduces the naive fit")

    cells = [
        (k, lam, b)
        for k, lam in enumerate(opts.lambdas)
        for b in range(1 if lam == 0 else opts.B)
    ]
    logger.info(
        f"SIMEX: {len(opts.lambdas)} levels x B={opts.B}, {len(cells)} fits, "
        f"{opts.extrapolant.value} extrapolant"
    )
    outcomes = ordered_map(
        partial(_simex_cell, data, layout, fitter, opts.seed), cells, jobs=opts.jobs
    )

    per_lambda = []
    for k, lam in enumerate(opts.lambdas):
        level = [(cell, out) for cell, out in zip(cells, outcomes) if cell[0] == k]
        fits = [fit for _, (fit, _) in level if fit is not None]
        failed = len(level) - len(fits)
        for (_, _, b), (_, error) in level:
            if error is not None:
                get_context_logger(__name__, lam=lam, replicate=b).warning(
                    f"Dropped SIMEX cell: {error}"
                )
        if failed > opts.failure_threshold * len(level) or not fits:
            logger.error(f"SIMEX aborted at lambda={lam}: {failed}/{len(level)} failed")
            raise FailureThresholdError(
                f"simex lambda={lam}", failed, len(level), opts.failure_threshold
            )
        per_lambda.append(average_fits(fits, lam=lam, n_failed=failed))

    return extrapolate_fits(per_lambda, opts, method=method)
