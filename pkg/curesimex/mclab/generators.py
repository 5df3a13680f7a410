"""
Data generators for the simulation models.

All latent quantities (covariates, cure status, event and censoring times)
are drawn before the measurement error, so the latent dataset is the same
for every error setting sharing a seed.
"""

import numpy as np
from scipy.special import expit

from curesimex.core.exceptions import InvalidArgumentError
from curesimex.mclab.constants import ErrorKind
from curesimex.mclab.schemas import ScenarioSpec
from curesimex.model.schemas import Dataset, LatentDataset


def perturbed_error_sampler(
    kind: ErrorKind | str,
    v: float,
    df: int,
    rng: np.random.Generator,
    size: int | tuple[int, ...],
) -> np.ndarray:
    """
    Mean-zero measurement errors with standard deviation ``v``.

    Uniform errors live on (-v sqrt(3), v sqrt(3)); Student-t draws are scaled
    by v sqrt((k-2)/k); chi-squared draws are scaled by v / sqrt(2k) and
    shifted by their mean.
    """
    kind = ErrorKind(kind)
    if not v > 0:
        raise InvalidArgumentError("error sd must be positive", "v")

    if kind is ErrorKind.NORMAL:
        return rng.normal(0.0, v, size)
    if kind is ErrorKind.UNIFORM:
        a = v * np.sqrt(3.0)
        return rng.uniform(-a, a, size)
    if kind is ErrorKind.STUDENT_T:
        if df < 3:
            raise InvalidArgumentError("Student-t errors need df >= 3", "df")
        return v * np.sqrt((df - 2) / df) * rng.standard_t(df, size)
    if df < 1:
        raise InvalidArgumentError("chi-squared errors need df >= 1", "df")
    a = v / np.sqrt(2.0 * df)
    return a * (rng.chisquare(df, size) - df)


def _covariates(model_id: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if model_id == 1:
        return rng.standard_normal((n, 1))
    if model_id == 2:
        return np.column_stack([rng.uniform(-1.0, 1.0, n), rng.binomial(1, 0.5, n)])
    if model_id == 3:
        return np.column_stack(
            [
                rng.uniform(-1.0, 1.0, n),
                rng.binomial(1, 0.5, n),
                rng.normal(0.0, 0.3, n),
            ]
        )
    x = rng.standard_normal(n)
    if model_id == 4:
        return np.column_stack([x, rng.uniform(-1.0, 1.0, n)])
    return np.column_stack([x, -x + rng.normal(0.0, 0.5, n)])


def generate(
    spec: ScenarioSpec, rng: np.random.Generator
) -> tuple[Dataset, LatentDataset]:
    """Draw one dataset: the observed version and the latent truth."""
    n = spec.n
    layout = spec.layout()
    exact = _covariates(spec.model_id, n, rng).astype(float)

    x = np.column_stack([np.ones(n), exact[:, list(layout.incidence_idx)]])
    uncured = rng.random(n) < expit(x @ np.asarray(spec.gamma_true))

    z = exact[:, list(layout.latency_idx)]
    risk = spec.mu * np.exp(z @ np.asarray(spec.beta_true))
    u = rng.random(n)
    weibull = (-np.log1p(-u) / risk) ** (1.0 / spec.rho)
    event = np.where(uncured, np.minimum(weibull, spec.tau0), np.inf)

    censor = np.minimum(rng.exponential(1.0 / spec.censor_rate, n), spec.tau)
    times = np.minimum(event, censor)
    status = (event <= censor).astype(np.int8)

    latent = LatentDataset(
        times=times,
        status=status,
        covariates=exact,
        column_names=spec.column_names,
        cured=~uncured,
    )

    observed = exact.copy()
    for j, v in enumerate(spec.error_sd):
        if v > 0:
            observed[:, j] += perturbed_error_sampler(
                spec.error_kind, v, spec.error_df, rng, n
            )
    return latent.with_covariates(observed), latent
