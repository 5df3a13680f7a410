"""
Newton solvers for the EM M-steps.

Weighted logistic regression for the incidence and the weighted Cox partial
likelihood (Breslow ties) for the latency. Both work on internally
standardized covariates and map coefficients back to the original scale.
"""

import numpy as np
from scipy import linalg
from scipy.special import expit

from curesimex.em.constants import MAX_STEP_HALVINGS, SEPARATION_ETA
from curesimex.model.schemas import StepFunction


# ============================================================================
# Standardization
# ============================================================================


class _Standardizer:
    """Affine map between original and standardized coefficient scales."""

    def __init__(self, design: np.ndarray, intercept: bool) -> None:
        self.intercept = intercept
        self.center = design.mean(axis=0)
        scale = design.std(axis=0)
        self.scale = np.where(scale > 0, scale, 1.0)
        if intercept:
            self.center[0] = 0.0
            self.scale[0] = 1.0
        self.design = (design - self.center) / self.scale

    def to_standard(self, coef: np.ndarray) -> np.ndarray:
        theta = coef * self.scale
        if self.intercept:
            theta[0] = coef[0] + float(self.center[1:] @ coef[1:])
        return theta

    def to_original(self, theta: np.ndarray) -> np.ndarray:
        coef = theta / self.scale
        if self.intercept:
            coef[0] = theta[0] - float(self.center[1:] @ coef[1:])
        return coef


def _accepts(candidate: float, current: float) -> bool:
    # Rounding-level decreases are accepted near the optimum
    slack = 1e-12 * max(1.0, abs(current))
    return bool(np.isfinite(candidate)) and candidate >= current - slack


def _stationary(grad: np.ndarray, step: np.ndarray, tol: float) -> bool:
    # Under separation the gradient vanishes while Newton steps stay O(1)
    small_grad = np.max(np.abs(grad), initial=0.0) < tol
    small_step = np.max(np.abs(step), initial=0.0) < np.sqrt(tol)
    return bool(small_grad and small_step)


def _newton_direction(info: np.ndarray, grad: np.ndarray) -> np.ndarray:
    try:
        return linalg.solve(info, grad, assume_a="pos")
    except (linalg.LinAlgError, ValueError):
        return linalg.lstsq(info, grad)[0]


# ============================================================================
# Weighted logistic regression
# ============================================================================


def _logistic_loglik(theta: np.ndarray, design: np.ndarray, w: np.ndarray) -> float:
    eta = design @ theta
    return float(np.sum(w * eta - np.logaddexp(0.0, eta)))


def weighted_logistic(
    design: np.ndarray,
    w: np.ndarray,
    init: np.ndarray | None = None,
    max_iter: int = 25,
    tol: float = 1e-10,
) -> tuple[np.ndarray, bool, bool, int]:
    """
    Maximize sum w log(phi) + (1 - w) log(1 - phi) by damped Newton.

    ``design`` carries the intercept column first. Returns
    ``(gamma, converged, diverged, iterations)``; ``diverged`` flags
    non-convergence or a linear predictor beyond the separation bound.
    """
    n, p = design.shape
    std = _Standardizer(design, intercept=True)
    x = std.design
    theta = std.to_standard(
        np.zeros(p) if init is None else np.asarray(init, dtype=float).copy()
    )
    loglik = _logistic_loglik(theta, x, w)
    if not np.isfinite(loglik):
        theta = np.zeros(p)
        loglik = _logistic_loglik(theta, x, w)

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        prob = expit(x @ theta)
        grad = x.T @ (w - prob) / n
        info = (x * (prob * (1.0 - prob))[:, None]).T @ x / n
        step = _newton_direction(info, grad)
        if _stationary(grad, step, tol):
            converged = True
            break

        size = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            candidate = theta + size * step
            cand_loglik = _logistic_loglik(candidate, x, w)
            if _accepts(cand_loglik, loglik):
                break
            size /= 2.0
        else:
            break

        theta, loglik = candidate, cand_loglik
        if np.max(np.abs(size * step)) < tol:
            converged = True
            break

    gamma = std.to_original(theta)
    separated = bool(np.max(np.abs(x @ theta)) > SEPARATION_ETA) if n else False
    return gamma, converged, (not converged) or separated, iterations


# ============================================================================
# Weighted Cox partial likelihood
# ============================================================================


class RiskSets:
    """
    Risk-set bookkeeping for sorted follow-up times.

    Sums over {i: y_i >= t_j} are reverse cumulative sums evaluated at the
    first sorted position of each distinct event time t_j.
    """

    def __init__(self, times: np.ndarray, status: np.ndarray) -> None:
        self.order = np.argsort(times, kind="stable")
        self.sorted_times = times[self.order]
        self.sorted_status = status[self.order]
        self.event_times, self.deaths = np.unique(
            self.sorted_times[self.sorted_status == 1], return_counts=True
        )
        self.first = np.searchsorted(self.sorted_times, self.event_times, side="left")

    def at_risk_sums(self, values: np.ndarray) -> np.ndarray:
        """Sum of ``values`` (in original record order) over each risk set."""
        ordered = values[self.order]
        rev = np.cumsum(ordered[::-1], axis=0)[::-1]
        return rev[self.first]


def _cox_terms(
    theta: np.ndarray,
    z: np.ndarray,
    w: np.ndarray,
    status: np.ndarray,
    risk_sets: RiskSets,
    with_derivatives: bool = True,
) -> tuple[float, np.ndarray, np.ndarray]:
    lp = z @ theta
    shift = float(np.max(lp[w > 0])) if np.any(w > 0) else 0.0
    r = w * np.exp(lp - shift)
    s0 = risk_sets.at_risk_sums(r)
    d = risk_sets.deaths
    events = status == 1
    loglik = float(np.sum(lp[events]) - np.sum(d * (np.log(s0) + shift)))
    if not with_derivatives:
        return loglik, np.empty(0), np.empty((0, 0))

    s1 = risk_sets.at_risk_sums(r[:, None] * z)
    s2 = risk_sets.at_risk_sums(r[:, None, None] * z[:, :, None] * z[:, None, :])
    mean_z = s1 / s0[:, None]
    grad = z[events].sum(axis=0) - d @ mean_z
    info = np.einsum("j,jkl->kl", d, s2 / s0[:, None, None]) - np.einsum(
        "j,jk,jl->kl", d, mean_z, mean_z
    )
    return loglik, grad, info


def weighted_cox(
    times: np.ndarray,
    status: np.ndarray,
    z: np.ndarray,
    w: np.ndarray,
    init: np.ndarray | None = None,
    max_iter: int = 25,
    tol: float = 1e-10,
) -> tuple[np.ndarray, bool, bool, int]:
    """
    Maximize the weighted Cox partial likelihood with Breslow ties.

    Censored records enter risk sets with multiplier w_i e^{beta'z_i}.
    Returns ``(beta, converged, diverged, iterations)``.
    """
    q = z.shape[1]
    if q == 0:
        return np.empty(0), True, False, 0

    std = _Standardizer(z, intercept=False)
    zs = std.design
    risk_sets = RiskSets(times, status)
    n_events = max(int(status.sum()), 1)
    theta = std.to_standard(
        np.zeros(q) if init is None else np.asarray(init, dtype=float).copy()
    )
    loglik, grad, info = _cox_terms(theta, zs, w, status, risk_sets)
    if not np.isfinite(loglik):
        theta = np.zeros(q)
        loglik, grad, info = _cox_terms(theta, zs, w, status, risk_sets)

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        step = _newton_direction(info, grad)
        if _stationary(grad / n_events, step, tol):
            converged = True
            break

        size = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            candidate = theta + size * step
            cand_loglik = _cox_terms(candidate, zs, w, status, risk_sets, False)[0]
            if _accepts(cand_loglik, loglik):
                break
            size /= 2.0
        else:
            break

        theta = candidate
        loglik, grad, info = _cox_terms(theta, zs, w, status, risk_sets)
        if np.max(np.abs(size * step)) < tol:
            converged = True
            break

    beta = std.to_original(theta)
    return beta, converged, not converged, iterations


def breslow_baseline(
    times: np.ndarray,
    status: np.ndarray,
    z: np.ndarray,
    w: np.ndarray,
    beta: np.ndarray,
) -> StepFunction:
    """Weighted Breslow estimator d_j / sum_{y_i >= t_j} w_i e^{beta'z_i}."""
    risk_sets = RiskSets(times, status)
    lp = z @ beta if z.shape[1] else np.zeros(times.shape[0])
    s0 = risk_sets.at_risk_sums(w * np.exp(lp))
    increments = risk_sets.deaths / s0
    return StepFunction(
        times=risk_sets.event_times,
        values=np.cumsum(increments),
        value_before_first=0.0,
    )
