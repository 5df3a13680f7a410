"""
EM Estimator Services

Maximum likelihood fit of the logistic/Cox mixture cure model through the
EM algorithm with the zero-tail constraint:

- E-step: posterior uncure probabilities
- M-steps: weighted logistic incidence, weighted Cox latency + Breslow
- observed-data log-likelihood used to monitor ascent
- frozen-incidence variant used by the presmoothing estimator
"""

from typing import Optional

import numpy as np
from scipy.special import expit

from curesimex.core.exceptions import ConvergenceError, InvalidArgumentError
from curesimex.core.logging import get_logger
from curesimex.em.constants import ASCENT_SLACK, SEPARATION_ETA, EstimatorName
from curesimex.em.schemas import EmOptions, IncidenceStep, LatencyStep, UncureWeights
from curesimex.em.solvers import breslow_baseline, weighted_cox, weighted_logistic
from curesimex.model.schemas import CureFit, Dataset, ModelLayout, StepFunction
from curesimex.model.services import clamp_probability


logger = get_logger(__name__)


# ============================================================================
# Validation
# ============================================================================


def _check_layout(data: Dataset, layout: ModelLayout) -> None:
    if layout.dim != data.dim:
        raise InvalidArgumentError(
            f"layout covers {layout.dim} covariates, dataset has {data.dim}", "layout"
        )


def _check_events(data: Dataset) -> None:
    if data.n_events == 0:
        raise InvalidArgumentError("dataset has no observed events", "status")


def resolve_tau0(data: Dataset, opts: EmOptions) -> float:
    """Identifiability horizon: the override, else the last event time."""
    last_event = data.last_event_time
    if opts.tau0 is None:
        return last_event
    if opts.tau0 < last_event:
        raise InvalidArgumentError(
            f"tau0={opts.tau0} precedes the last event time {last_event}", "tau0"
        )
    return float(opts.tau0)


# ============================================================================
# E-step / M-steps
# ============================================================================


def e_step(data: Dataset, layout: ModelLayout, current: CureFit) -> UncureWeights:
    """Posterior probability of being uncured for every record."""
    _check_layout(data, layout)
    phi = clamp_probability(expit(data.incidence_design(layout) @ current.gamma))
    risk = np.exp(data.latency_design(layout) @ current.beta)
    su = np.exp(-np.asarray(current.baseline(data.times)) * risk)
    w = phi * su / (1.0 - phi + phi * su)

    w = np.where(data.status == 1, 1.0, w)
    w = np.where((data.status == 0) & (data.times > current.tau0), 0.0, w)
    return UncureWeights(w=np.clip(w, 0.0, 1.0))


def m_step_incidence(
    data: Dataset,
    layout: ModelLayout,
    w: UncureWeights,
    init: Optional[np.ndarray] = None,
    opts: Optional[EmOptions] = None,
) -> IncidenceStep:
    """Weighted logistic fit of the uncure weights on the incidence design."""
    opts = opts or EmOptions()
    _check_layout(data, layout)
    gamma, converged, diverged, iterations = weighted_logistic(
        data.incidence_design(layout),
        w.w,
        init=init,
        max_iter=opts.inner_newton_iter,
        tol=opts.inner_tol,
    )
    if diverged:
        logger.debug(f"Incidence M-step diverged after {iterations} Newton iterations")
    return IncidenceStep(
        gamma=gamma, converged=converged, diverged=diverged, iterations=iterations
    )


def breslow(
    data: Dataset, layout: ModelLayout, w: UncureWeights, beta: np.ndarray
) -> StepFunction:
    """Weighted Breslow baseline at fixed latency coefficients."""
    _check_events(data)
    return breslow_baseline(
        data.times,
        data.status,
        data.latency_design(layout),
        w.w,
        np.asarray(beta, dtype=float),
    )


def m_step_latency(
    data: Dataset,
    layout: ModelLayout,
    w: UncureWeights,
    init_beta: Optional[np.ndarray] = None,
    opts: Optional[EmOptions] = None,
) -> LatencyStep:
    """Weighted Cox partial likelihood fit followed by the Breslow baseline."""
    opts = opts or EmOptions()
    _check_layout(data, layout)
    _check_events(data)
    z = data.latency_design(layout)
    beta, converged, diverged, iterations = weighted_cox(
        data.times,
        data.status,
        z,
        w.w,
        init=init_beta,
        max_iter=opts.inner_newton_iter,
        tol=opts.inner_tol,
    )
    baseline = breslow_baseline(data.times, data.status, z, w.w, beta)
    return LatencyStep(
        beta=beta,
        baseline=baseline,
        converged=converged,
        diverged=diverged,
        iterations=iterations,
    )


# ============================================================================
# Likelihood
# ============================================================================


def observed_loglik(data: Dataset, layout: ModelLayout, fit: CureFit) -> float:
    """
    Observed-data log-likelihood of the discrete-hazard mixture model.

    Events contribute log phi + log dLambda(y) + beta'z - Lambda(y) e^{beta'z};
    censored records contribute log(1 - phi + phi S_u(y)), with S_u = 0 past
    tau0 so the value matches the zero-tail E-step.
    """
    _check_layout(data, layout)
    phi = clamp_probability(expit(data.incidence_design(layout) @ fit.gamma))
    lp = data.latency_design(layout) @ fit.beta
    cum = np.asarray(fit.baseline(data.times))
    jump = cum - np.asarray(fit.baseline.left_limit(data.times))
    events = data.status == 1

    with np.errstate(divide="ignore"):
        event_terms = (
            np.log(phi[events])
            + np.log(jump[events])
            + lp[events]
            - cum[events] * np.exp(lp[events])
        )
        su = np.exp(-cum[~events] * np.exp(lp[~events]))
        su = np.where(data.times[~events] > fit.tau0, 0.0, su)
        censored_terms = np.log(1.0 - phi[~events] + phi[~events] * su)
    return float(np.sum(event_terms) + np.sum(censored_terms))


# ============================================================================
# EM loop
# ============================================================================


def _initial_latency(
    data: Dataset, layout: ModelLayout, opts: EmOptions
) -> LatencyStep:
    # Events-only Cox fit: w = delta drops censored records from every risk set
    return m_step_latency(
        data, layout, UncureWeights(w=data.status.astype(float)), opts=opts
    )


def _run_em(
    data: Dataset,
    layout: ModelLayout,
    opts: EmOptions,
    gamma: np.ndarray,
    latency: LatencyStep,
    tau0: float,
    freeze_gamma: bool,
    method: str,
) -> CureFit:
    fit = CureFit(
        gamma=gamma,
        beta=latency.beta,
        baseline=latency.baseline,
        tau0=tau0,
        method=method,
    )
    loglik = observed_loglik(data, layout, fit)
    trace = [loglik]
    incidence_diverged = False
    latency_diverged = latency.diverged
    converged = False
    iterations = 0
    violations = 0

    for iterations in range(1, opts.max_iter + 1):
        weights = e_step(data, layout, fit)
        new_gamma = fit.gamma
        if not freeze_gamma:
            incidence = m_step_incidence(
                data, layout, weights, init=fit.gamma, opts=opts
            )
            new_gamma = incidence.gamma
            incidence_diverged = incidence.diverged
        latency = m_step_latency(data, layout, weights, init_beta=fit.beta, opts=opts)
        latency_diverged = latency.diverged

        change = float(
            np.max(
                np.abs(
                    np.concatenate([new_gamma - fit.gamma, latency.beta - fit.beta])
                ),
                initial=0.0,
            )
        )
        fit = CureFit(
            gamma=new_gamma,
            beta=latency.beta,
            baseline=latency.baseline,
            tau0=tau0,
            method=method,
        )
        if not fit.is_finite:
            logger.debug(f"EM produced non-finite parameters at iteration {iterations}")
            raise ConvergenceError(method, iterations)

        new_loglik = observed_loglik(data, layout, fit)
        if new_loglik < loglik - ASCENT_SLACK * abs(loglik):
            violations += 1
            logger.warning(
                f"EM ({method}) log-likelihood decreased at iteration {iterations}: "
                f"{loglik:.10f} -> {new_loglik:.10f}"
            )
        loglik = new_loglik
        trace.append(loglik)

        if change < opts.tol:
            converged = True
            break

    eta = data.incidence_design(layout) @ fit.gamma
    incidence_diverged = incidence_diverged or bool(
        np.max(np.abs(eta)) > SEPARATION_ETA
    )
    if converged:
        logger.debug(
            f"EM ({method}) converged in {iterations} iterations, loglik={loglik:.6f}"
        )
    else:
        logger.debug(f"EM ({method}) stopped after {iterations} iterations")

    return fit.replace(
        loglik=loglik,
        converged=converged,
        iterations=iterations,
        incidence_diverged=incidence_diverged,
        latency_diverged=latency_diverged,
        loglik_trace=tuple(trace),
        ascent_violations=violations,
    )


def _prepare(data: Dataset, layout: ModelLayout, opts: EmOptions) -> float:
    _check_layout(data, layout)
    _check_events(data)
    if data.n_events == data.n:
        raise InvalidArgumentError("dataset has no censored records", "status")
    tau0 = resolve_tau0(data, opts)
    if not np.any((data.status == 0) & (data.times > tau0)):
        logger.debug(
            f"No censored records beyond tau0={tau0}; cure fraction weakly identified"
        )
    return tau0


def fit_mle(
    data: Dataset, layout: ModelLayout, opts: Optional[EmOptions] = None
) -> CureFit:
    """
    Fit the mixture cure model by maximum likelihood (EM).

    Starts from a logistic fit of the event indicator on X and an
    events-only Cox/Breslow fit, then alternates E- and M-steps until the
    largest change over (gamma, beta) drops below ``opts.tol``.
    """
    opts = opts or EmOptions()
    tau0 = _prepare(data, layout, opts)
    initial_weights = UncureWeights(w=data.status.astype(float))
    gamma0 = m_step_incidence(data, layout, initial_weights, opts=opts).gamma
    latency0 = _initial_latency(data, layout, opts)
    return _run_em(
        data,
        layout,
        opts,
        gamma=gamma0,
        latency=latency0,
        tau0=tau0,
        freeze_gamma=False,
        method=EstimatorName.MLE.value,
    )


def fit_latency_given_incidence(
    data: Dataset,
    layout: ModelLayout,
    gamma: np.ndarray,
    opts: Optional[EmOptions] = None,
    method: str = EstimatorName.PRESMOOTH.value,
) -> CureFit:
    """Run the EM loop with the incidence coefficients held fixed."""
    opts = opts or EmOptions()
    tau0 = _prepare(data, layout, opts)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (layout.p,):
        raise InvalidArgumentError(
            f"gamma has length {gamma.shape[0]}, layout needs {layout.p}", "gamma"
        )
    return _run_em(
        data,
        layout,
        opts,
        gamma=gamma,
        latency=_initial_latency(data, layout, opts),
        tau0=tau0,
        freeze_gamma=True,
        method=method,
    )
