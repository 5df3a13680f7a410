"""
Monte Carlo Lab Services

Replicated generate -> fit (-> SIMEX) pipelines and their bias, variance
and MSE summaries.
"""

from collections.abc import Sequence
from functools import partial
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from curesimex.core.config import get_settings
from curesimex.core.exceptions import FailureThresholdError, InvalidArgumentError
from curesimex.core.logging import get_context_logger, get_logger, log_performance
from curesimex.core.parallel import ordered_map
from curesimex.core.random import child_seed, substream
from curesimex.em.schemas import EmOptions
from curesimex.mclab.constants import StudyMethod
from curesimex.mclab.generators import generate
from curesimex.mclab.presets import get_preset
from curesimex.mclab.schemas import (
    McSummary,
    ParameterSummary,
    ScenarioSpec,
    StudyArm,
    StudyResult,
)
from curesimex.presmooth.schemas import PresmoothOptions
from curesimex.simex.fitters import make_fitter
from curesimex.simex.schemas import SimexOptions
from curesimex.simex.services import CELL_ERRORS, run_simex


logger = get_logger(__name__)


class StudyOptions(BaseModel):
    """Estimator options shared by every replicate of a study."""

    model_config = ConfigDict(frozen=True)

    em: EmOptions = Field(default_factory=EmOptions)
    presmooth: PresmoothOptions = Field(default_factory=PresmoothOptions)
    simex: SimexOptions = Field(default_factory=SimexOptions)
    failure_threshold: float = Field(
        default_factory=lambda: get_settings().study_failure_threshold, ge=0, le=1
    )


# ============================================================================
# Summaries
# ============================================================================


def summarize(
    estimates: Any,
    truth: Any,
    names: Optional[Sequence[str]] = None,
    method: str = "",
    label: str = "",
    n_failed: int = 0,
) -> McSummary:
    """Bias, variance (denominator R) and MSE of replicated estimates."""
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    true = np.asarray(truth, dtype=float).reshape(-1)
    if est.shape[0] < 2:
        raise InvalidArgumentError("at least two replicates are required", "estimates")
    if est.shape[1] != true.size:
        raise InvalidArgumentError(
            f"estimates have {est.shape[1]} parameters, truth has {true.size}", "truth"
        )
    if names is None:
        names = [f"theta{j}" for j in range(true.size)]

    mean = est.mean(axis=0)
    bias = mean - true
    variance = np.mean((est - mean) ** 2, axis=0)
    mse = np.mean((est - true) ** 2, axis=0)
    return McSummary(
        parameters=tuple(
            ParameterSummary(
                name=names[j],
                truth=float(true[j]),
                bias=float(bias[j]),
                variance=float(variance[j]),
                mse=float(mse[j]),
            )
            for j in range(true.size)
        ),
        replicates=int(est.shape[0]),
        n_failed=n_failed,
        method=method,
        label=label,
    )


# ============================================================================
# Replicates
# ============================================================================


def _replicate(
    spec: ScenarioSpec,
    method: StudyMethod,
    options: StudyOptions,
    seed: int,
    r: int,
) -> tuple[Optional[np.ndarray], Optional[str]]:
    observed, _ = generate(spec, substream(seed, r, 0))
    layout = spec.layout()
    try:
        fitter = make_fitter(
            method.estimator,
            observed,
            layout,
            em=options.em,
            presmooth=options.presmooth,
        )
        if method.uses_simex:
            simex_opts = options.simex.model_copy(
                update={"seed": child_seed(seed, r, 1), "jobs": 1}
            )
            params = run_simex(observed, layout, fitter, simex_opts).params
        else:
            params = fitter(observed, layout).params
    except CELL_ERRORS as e:
        return None, f"{type(e).__name__}: {e}"
    if not np.all(np.isfinite(params)):
        return None, "non-finite parameters"
    return params, None


@log_performance(threshold_ms=3_600_000.0)
def run_study(
    spec: ScenarioSpec,
    method: StudyMethod | str,
    R: int,
    opts: Optional[StudyOptions] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = 1,
) -> McSummary:
    """
    Run ``R`` replicates of one scenario under one estimation method.

    Replicate r generates its data from the substream (seed, r, 0) and seeds
    its SIMEX run with a child seed of (seed, r, 1), so the summary does not
    depend on ``jobs``.
    """
    method = StudyMethod(method)
    opts = opts or StudyOptions()
    seed = get_settings().default_seed if seed is None else seed
    if R < 2:
        raise InvalidArgumentError("a study needs at least two replicates", "R")

    logger.info(
        f"Study {spec.label or spec.model_id}: {method.value}, R={R}, n={spec.n}"
    )
    outcomes = ordered_map(
        partial(_replicate, spec, method, opts, seed), range(R), jobs=jobs
    )

    estimates = []
    failed = 0
    for r, (params, error) in enumerate(outcomes):
        if params is None:
            failed += 1
            get_context_logger(__name__, seed=seed, replicate=r).warning(
                f"Dropped replicate: {error}"
            )
        else:
            estimates.append(params)
    if failed > opts.failure_threshold * R or len(estimates) < 2:
        logger.error(f"Study aborted: {failed}/{R} replicates failed")
        raise FailureThresholdError("study", failed, R, opts.failure_threshold)

    return summarize(
        np.stack(estimates),
        spec.truth,
        names=spec.parameter_names(),
        method=method.value,
        label=spec.label,
        n_failed=failed,
    )


# ============================================================================
# Study arms
# ============================================================================


def resolve_arm(arm: StudyArm) -> ScenarioSpec:
    """Preset scenario with the arm's overrides applied."""
    return get_preset(arm.preset).with_overrides(
        n=arm.sample_size,
        error_sd=arm.error_sd,
        assumed_error_sd=arm.assumed_error_sd,
        error_kind=arm.error_kind,
        error_df=arm.error_df,
        label=arm.name,
    )


def run_arms(
    arms: Sequence[StudyArm],
    opts: Optional[StudyOptions] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = 1,
    replicates: Optional[int] = None,
) -> StudyResult:
    """Run every arm of a study; arm seeds override the shared ``seed``."""
    opts = opts or StudyOptions()
    summaries = []
    for arm in arms:
        update: dict[str, Any] = {"extrapolant": arm.extrapolant}
        if arm.lambdas is not None:
            update["lambdas"] = arm.lambdas
        if arm.B is not None:
            update["B"] = arm.B
        arm_simex = opts.simex.model_copy(update=update)
        arm_opts = opts.model_copy(update={"simex": arm_simex})
        summaries.append(
            run_study(
                resolve_arm(arm),
                arm.method,
                replicates or arm.replicates,
                opts=arm_opts,
                seed=arm.seed if arm.seed is not None else seed,
                jobs=jobs,
            )
        )
    return StudyResult(arms=tuple(arms), summaries=tuple(summaries))
