"""
EM Estimator Services Tests
"""

import itertools
import logging
from unittest.mock import patch

import numpy as np
import pytest

from curesimex.core.exceptions import ConvergenceError, InvalidArgumentError
from curesimex.core.random import substream
from curesimex.em.constants import ASCENT_SLACK
from curesimex.em.schemas import EmOptions, LatencyStep, UncureWeights
from curesimex.em.services import (
    e_step,
    fit_latency_given_incidence,
    fit_mle,
    m_step_incidence,
    m_step_latency,
    observed_loglik,
    resolve_tau0,
)
from curesimex.mclab.generators import generate
from curesimex.mclab.presets import get_preset
from curesimex.em.solvers import weighted_cox
from curesimex.model.schemas import CureFit, Dataset, ModelLayout, StepFunction
from curesimex.model.services import phi_logistic


LAYOUT = ModelLayout.from_error_sd((0,), (0,), (0.0,))


def _latent(n: int, seed: int, preset: str = "m1-s1-sc1-c1") -> Dataset:
    _, latent = generate(get_preset(preset).with_overrides(n=n), substream(seed))
    return latent


def _grid_argmax(objective, dims: int, lo: float = -10.0, hi: float = 10.0):
    """Refining grid search of a concave objective on [lo, hi]^dims."""
    center = np.full(dims, (lo + hi) / 2)
    half = (hi - lo) / 2
    for _ in range(12):
        axes = [np.linspace(c - half, c + half, 21) for c in center]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dims)
        values = np.array([objective(point) for point in mesh])
        center = mesh[np.argmax(values)]
        half /= 5
    return center


def _copy(data: Dataset, order=None, scale: float = 1.0) -> Dataset:
    order = np.arange(data.n) if order is None else order
    return Dataset(
        times=data.times[order],
        status=data.status[order],
        covariates=data.covariates[order] * scale,
        column_names=data.column_names,
    )


@pytest.fixture
def tiny() -> tuple[Dataset, CureFit]:
    data = Dataset(
        times=[1.0, 2.0, 3.0, 5.0],
        status=[1, 0, 0, 0],
        covariates=np.zeros((4, 1)),
        column_names=("x",),
    )
    fit = CureFit(
        gamma=[0.0, 0.0],
        beta=[0.0],
        baseline=StepFunction(times=[1.0], values=[0.5]),
        tau0=3.0,
    )
    return data, fit


class TestSteps:
    """Tests for the E-step, M-steps and likelihood."""

    def test_e_step(self, tiny):
        data, fit = tiny
        s = np.exp(-0.5)

        w = e_step(data, LAYOUT, fit).w

        np.testing.assert_allclose(w, [1.0, s / (1 + s), s / (1 + s), 0.0])

    def test_observed_loglik_hand_value(self, tiny):
        data, fit = tiny
        expected = (
            np.log(0.5) + np.log(0.5) - 0.5
            + 2 * np.log(0.5 + 0.5 * np.exp(-0.5))
            + np.log(0.5)
        )

        assert observed_loglik(data, LAYOUT, fit) == pytest.approx(expected)

    def test_m_step_incidence_intercept(self, tiny):
        data, _ = tiny

        step = m_step_incidence(data, LAYOUT, UncureWeights(w=[1.0, 0.5, 0.5, 0.0]))

        # Constant covariate: the slope is irrelevant and the mean is matched
        eta = step.gamma[0]
        assert 1 / (1 + np.exp(-eta)) == pytest.approx(0.5, abs=1e-8)

    def test_e_step_censored_value(self):
        data = Dataset(
            times=[1.0, 2.0],
            status=[1, 0],
            covariates=np.zeros((2, 1)),
            column_names=("x",),
        )
        # phi = 0.5 and Lambda(2) e^{beta'z} = 1
        fit = CureFit(
            gamma=[0.0, 0.0],
            beta=[0.0],
            baseline=StepFunction(times=[1.0], values=[1.0]),
            tau0=3.0,
        )

        w = e_step(data, LAYOUT, fit).w

        assert w[1] == pytest.approx(0.26894, abs=1e-5)

    def test_m_step_incidence_matches_grid_search(self):
        data = Dataset(
            times=[1.0, 2.0, 3.0, 4.0],
            status=[1, 1, 0, 0],
            covariates=[[0.0], [1.0], [0.0], [1.0]],
            column_names=("x",),
        )
        w = np.array([1.0, 1.0, 0.5, 0.0])
        design = data.incidence_design(LAYOUT)

        def objective(gamma):
            eta = design @ gamma
            return np.sum(w * eta - np.logaddexp(0.0, eta))

        step = m_step_incidence(data, LAYOUT, UncureWeights(w=w))

        np.testing.assert_allclose(step.gamma, _grid_argmax(objective, 2), atol=1e-4)
        np.testing.assert_allclose(step.gamma, [np.log(3), -np.log(3)], atol=1e-6)

    def test_m_step_latency_matches_grid_search(self):
        times = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        status = np.array([1, 0, 1, 1, 0])
        z = np.array([0.5, -1.0, 1.2, 0.3, -0.4])
        w = np.array([1.0, 0.6, 1.0, 1.0, 0.3])
        data = Dataset(
            times=times, status=status, covariates=z[:, None], column_names=("x",)
        )

        def at_risk(beta, t):
            return np.sum((w * np.exp(beta * z))[times >= t])

        def partial_loglik(beta):
            events = np.flatnonzero(status == 1)
            return sum(
                beta[0] * z[i] - np.log(at_risk(beta[0], times[i])) for i in events
            )

        step = m_step_latency(data, LAYOUT, UncureWeights(w=w))

        beta = step.beta[0]
        assert beta == pytest.approx(_grid_argmax(partial_loglik, 1)[0], abs=1e-4)
        increments = [1.0 / at_risk(beta, t) for t in (1.0, 3.0, 4.0)]
        np.testing.assert_array_equal(step.baseline.times, [1.0, 3.0, 4.0])
        np.testing.assert_allclose(
            step.baseline.values, np.cumsum(increments), rtol=1e-12
        )

    def test_uncure_weights_validated(self):
        with pytest.raises(InvalidArgumentError):
            UncureWeights(w=[0.2, 1.5])

    def test_resolve_tau0(self, tiny):
        data, _ = tiny

        assert resolve_tau0(data, EmOptions()) == 1.0
        assert resolve_tau0(data, EmOptions(tau0=4.0)) == 4.0
        with pytest.raises(InvalidArgumentError):
            resolve_tau0(data, EmOptions(tau0=0.5))


class TestFitMle:
    """Tests for the EM maximum likelihood fit."""

    def test_fit_on_simulated_data(self):
        data = _latent(2000, seed=1)

        fit = fit_mle(data, LAYOUT)

        assert fit.converged
        assert fit.method == "mle"
        assert fit.tau0 == data.last_event_time
        np.testing.assert_array_equal(fit.baseline.times, data.event_times)
        assert fit.beta[0] == pytest.approx(1.0, abs=0.25)
        assert fit.gamma[0] == pytest.approx(1.4, abs=0.4)
        assert fit.baseline.is_monotone

    def test_loglik_never_decreases(self):
        """The observed log-likelihood is monotone across EM iterations."""
        checked = 0
        for seed in range(100):
            data = _latent(40, seed=seed)
            if data.n_events in (0, data.n):
                continue
            fit = fit_mle(data, LAYOUT, EmOptions(max_iter=60))
            trace = np.asarray(fit.loglik_trace)
            slack = ASCENT_SLACK * np.abs(trace[:-1])
            assert np.all(np.diff(trace) >= -slack), f"seed {seed}"
            assert fit.ascent_violations == 0
            checked += 1
        assert checked >= 95

    def test_ascent_violation_is_logged_and_counted(self, caplog):
        data = _latent(100, seed=2)
        decreasing = itertools.count(0.0, -1.0)

        with patch(
            "curesimex.em.services.observed_loglik",
            side_effect=lambda *args: next(decreasing),
        ):
            with caplog.at_level(logging.WARNING, logger="curesimex.em.services"):
                fit = fit_mle(data, LAYOUT, EmOptions(max_iter=3, tol=1e-300))

        warnings = [r for r in caplog.records if r.levelno == logging.WARNING]
        assert fit.ascent_violations == 3
        assert len(warnings) == 3
        assert "log-likelihood decreased" in warnings[0].getMessage()
        assert fit.to_dict()["ascent_violations"] == 3

    def test_record_order_does_not_matter(self):
        data = _latent(200, seed=3)
        order = np.random.default_rng(0).permutation(data.n)

        fit = fit_mle(data, LAYOUT)
        shuffled = fit_mle(_copy(data, order=order), LAYOUT)

        np.testing.assert_allclose(shuffled.params, fit.params, atol=1e-6)
        np.testing.assert_allclose(
            shuffled.baseline.values, fit.baseline.values, atol=1e-6
        )

    def test_scaled_covariate_rescales_coefficients(self):
        c = 2.5
        data = _latent(200, seed=4)
        scaled = _copy(data, scale=c)
        opts = EmOptions(tol=1e-9, max_iter=2000)

        fit = fit_mle(data, LAYOUT, opts)
        fit_scaled = fit_mle(scaled, LAYOUT, opts)

        assert fit_scaled.gamma[0] == pytest.approx(fit.gamma[0], abs=1e-6)
        assert fit_scaled.gamma[1] == pytest.approx(fit.gamma[1] / c, abs=1e-6)
        assert fit_scaled.beta[0] == pytest.approx(fit.beta[0] / c, abs=1e-6)
        np.testing.assert_allclose(
            phi_logistic(fit_scaled.gamma, scaled.incidence_design(LAYOUT)),
            phi_logistic(fit.gamma, data.incidence_design(LAYOUT)),
            atol=1e-6,
        )

    def test_no_cure_flags_separation_and_matches_cox(self):
        rng = np.random.default_rng(11)
        n = 500
        z = rng.normal(size=n)
        times = 1.0 + rng.exponential(1.0 / np.exp(z))
        status = np.ones(n, dtype=int)
        # Censoring before the first event carries no information on the cure status
        early = rng.choice(n, size=10, replace=False)
        times[early] = rng.uniform(0.1, 0.9, size=10)
        status[early] = 0
        data = Dataset(
            times=times, status=status, covariates=z[:, None], column_names=("x",)
        )

        fit = fit_mle(data, LAYOUT, EmOptions(max_iter=100))
        cox_beta, *_ = weighted_cox(times, status, z[:, None], np.ones(n))

        assert fit.incidence_diverged
        assert fit.beta[0] == pytest.approx(cox_beta[0], abs=0.05)

    def test_score_vanishes_at_convergence(self):
        """Finite-difference gradient in (gamma, beta) with the baseline held fixed."""
        data = _latent(200, seed=5)
        fit = fit_mle(data, LAYOUT, EmOptions(tol=1e-9, max_iter=5000))
        params = fit.params
        p = fit.gamma.size
        h = 1e-5

        def loglik(theta):
            trial = fit.replace(gamma=theta[:p], beta=theta[p:])
            return observed_loglik(data, LAYOUT, trial)

        grad = []
        for k in range(params.size):
            e = np.zeros(params.size)
            e[k] = h
            grad.append((loglik(params + e) - loglik(params - e)) / (2 * h))

        assert fit.converged
        assert np.max(np.abs(grad)) < 1e-3

    def test_tau0_override(self):
        data = _latent(200, seed=2)

        fit = fit_mle(data, LAYOUT, EmOptions(tau0=data.last_event_time + 1.0))

        assert fit.tau0 == data.last_event_time + 1.0

    def test_all_censored_rejected(self):
        data = Dataset(
            times=[1.0, 2.0],
            status=[0, 0],
            covariates=[[0.0], [1.0]],
            column_names=("x",),
        )

        with pytest.raises(InvalidArgumentError):
            fit_mle(data, LAYOUT)

    def test_all_events_rejected(self):
        data = Dataset(
            times=[1.0, 2.0],
            status=[1, 1],
            covariates=[[0.0], [1.0]],
            column_names=("x",),
        )

        with pytest.raises(InvalidArgumentError):
            fit_mle(data, LAYOUT)

    def test_layout_dimension_mismatch(self):
        data = _latent(50, seed=3)
        layout = ModelLayout.from_error_sd((0,), (1,), (0.0, 0.0))

        with pytest.raises(InvalidArgumentError):
            fit_mle(data, layout)

    def test_non_finite_iterate_raises(self):
        data = _latent(100, seed=5)
        calls = {"n": 0}

        def blows_up(*args, **kwargs):
            calls["n"] += 1
            step = m_step_latency(*args, **kwargs)
            if calls["n"] == 1:
                return step
            return LatencyStep(
                beta=np.array([np.nan]),
                baseline=step.baseline,
                converged=False,
                diverged=True,
                iterations=step.iterations,
            )

        with patch("curesimex.em.services.m_step_latency", side_effect=blows_up):
            with pytest.raises(ConvergenceError) as exc_info:
                fit_mle(data, LAYOUT)

        assert exc_info.value.details["iterations"] == 1


class TestFrozenIncidence:
    def test_gamma_is_kept(self):
        data = _latent(200, seed=4)

        fit = fit_latency_given_incidence(data, LAYOUT, np.array([1.0, 0.2]))

        np.testing.assert_array_equal(fit.gamma, [1.0, 0.2])
        assert fit.method == "presmooth"
        assert fit.converged

    def test_wrong_gamma_length(self):
        data = _latent(50, seed=4)

        with pytest.raises(InvalidArgumentError):
            fit_latency_given_incidence(data, LAYOUT, np.array([1.0]))
