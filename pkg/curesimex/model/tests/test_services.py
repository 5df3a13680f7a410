"""
Model Services Tests

Closed-form model quantities and Kaplan-Meier curves.
"""

import warnings

import numpy as np
import pytest
from scipy.special import expit

from curesimex.core.exceptions import InvalidArgumentError
from curesimex.model.schemas import CureFit, Dataset, StepFunction
from curesimex.model.services import (
    cox_survival,
    cure_probability,
    kaplan_meier,
    kaplan_meier_by_group,
    phi_logistic,
    plateau_fraction,
    population_survival,
)


@pytest.fixture
def fit() -> CureFit:
    return CureFit(
        gamma=[0.4, -1.2],
        beta=[0.8],
        baseline=StepFunction(times=[1.0, 2.0, 3.0], values=[0.2, 0.5, 1.1]),
        tau0=3.0,
    )


class TestModelQuantities:
    """Tests for phi, latency and population survival."""

    def test_phi_at_zero(self):
        assert phi_logistic([0.0, 3.0], [1.0, 0.0]) == pytest.approx(0.5)

    def test_phi_vectorised(self):
        x = np.array([[1.0, 0.0], [1.0, 2.0]])

        np.testing.assert_allclose(phi_logistic([0.5, 1.0], x), expit([0.5, 2.5]))

    def test_phi_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            phi_logistic([0.5, 1.0], [1.0, 0.0, 2.0])

    def test_cox_survival(self, fit):
        expected = np.exp(-0.5 * np.exp(0.8 * 1.5))
        survival = cox_survival(fit.beta, fit.baseline, 2.5, [1.5])

        assert survival == pytest.approx(expected)

    def test_population_survival_mixture(self, fit):
        x = [1.0, 0.3]
        z = [0.2]
        phi = phi_logistic(fit.gamma, x)
        su = cox_survival(fit.beta, fit.baseline, 2.0, z)

        assert population_survival(fit, 2.0, x, z) == pytest.approx(1 - phi + phi * su)

    def test_population_survival_tends_to_cure_fraction(self, fit):
        x = [1.0, 0.3]
        far = population_survival(fit, 1e6, x, [50.0])

        assert far == pytest.approx(cure_probability(fit, x), abs=1e-12)

    def test_population_survival_before_first_jump(self, fit):
        assert population_survival(fit, 0.5, [1.0, 0.0], [0.0]) == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_phi_is_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        gamma = rng.normal(0.0, 3.0, 3)
        x = np.column_stack([np.ones(20), rng.normal(0.0, 2.0, (20, 2))])

        total = phi_logistic(gamma, x) + phi_logistic(-gamma, x)

        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_phi_saturates_without_warnings(self, fit):
        x = np.array([[1.0, 800.0], [1.0, -800.0]])

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            phi = phi_logistic([0.0, 1.0], x)
            extreme = fit.replace(gamma=[0.0, 1.0])
            survival = population_survival(extreme, 2.0, x, [[0.0], [0.0]])

        np.testing.assert_array_equal(phi, [1.0, 0.0])
        assert np.all(np.isfinite(survival))
        assert survival[1] == 1.0

    @pytest.mark.parametrize("seed", range(5))
    def test_population_survival_non_increasing(self, seed):
        rng = np.random.default_rng(seed)
        jumps = np.sort(rng.uniform(0.1, 5.0, 8))
        fit = CureFit(
            gamma=rng.normal(0.0, 2.0, 2),
            beta=rng.normal(0.0, 1.0, 1),
            baseline=StepFunction(
                times=jumps, values=np.cumsum(rng.exponential(0.3, 8))
            ),
            tau0=float(jumps[-1]),
        )
        t = np.sort(rng.uniform(0.0, 8.0, 200))
        x = [1.0, float(rng.normal())]
        z = [float(rng.normal())]

        survival = np.array([population_survival(fit, ti, x, z) for ti in t])

        assert np.all(np.diff(survival) <= 1e-15)
        assert np.all((survival >= 0) & (survival <= 1))


class TestKaplanMeier:
    """Tests for the product-limit estimator."""

    def test_hand_example(self):
        data = Dataset(
            times=[1.0, 2.0, 2.0, 3.0, 4.0],
            status=[1, 1, 0, 1, 0],
            covariates=np.zeros((5, 0)),
            column_names=(),
        )

        curve = kaplan_meier(data)

        np.testing.assert_allclose(curve.values, [0.8, 0.6, 0.3])
        assert curve(0.5) == 1.0

    def test_censoring_at_event_time_stays_at_risk(self):
        data = Dataset(
            times=[1.0, 2.0, 2.0],
            status=[1, 1, 0],
            covariates=np.zeros((3, 0)),
            column_names=(),
        )

        assert kaplan_meier(data)(2.0) == pytest.approx(1.0 / 3.0)

    def test_by_group(self):
        data = Dataset(
            times=[1.0, 2.0, 3.0, 4.0],
            status=[1, 0, 1, 1],
            covariates=[[0.0], [0.0], [1.0], [1.0]],
            column_names=("stage",),
        )

        curves = kaplan_meier_by_group(data, "stage")

        assert set(curves) == {0.0, 1.0}
        np.testing.assert_allclose(curves[0.0].values, [0.5])
        np.testing.assert_allclose(curves[1.0].values, [0.5, 0.0])

    def test_unknown_group_column(self):
        data = Dataset(times=[1.0], status=[1], covariates=[[0.0]], column_names=("x",))

        with pytest.raises(InvalidArgumentError):
            kaplan_meier_by_group(data, "stage")

    def test_plateau_fraction(self):
        data = Dataset(
            times=[1.0, 2.0, 5.0, 6.0],
            status=[1, 1, 0, 0],
            covariates=np.zeros((4, 0)),
            column_names=(),
        )

        assert plateau_fraction(data) == 0.5

    @pytest.mark.parametrize("seed", range(10))
    def test_all_events_is_one_minus_ecdf(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 51))
        times = 0.1 + np.round(rng.exponential(2.0, n), 1)
        data = Dataset(
            times=times,
            status=np.ones(n, dtype=int),
            covariates=np.zeros((n, 0)),
            column_names=(),
        )
        grid = np.linspace(0.0, times.max() + 1.0, 97)

        curve = kaplan_meier(data)

        ecdf = np.mean(times[None, :] <= grid[:, None], axis=1)
        np.testing.assert_allclose(curve(grid), 1.0 - ecdf, atol=1e-12)
