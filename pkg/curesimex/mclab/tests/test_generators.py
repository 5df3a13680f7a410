"""
Simulation Data Generator Tests
"""

import numpy as np
import pytest
from scipy import stats

from curesimex.core.exceptions import InvalidArgumentError
from curesimex.core.random import substream
from curesimex.mclab.constants import ErrorKind
from curesimex.mclab.generators import generate, perturbed_error_sampler
from curesimex.mclab.presets import PRESETS, get_preset


class TestErrorSampler:
    """Tests for the mean-zero error distributions."""

    @pytest.mark.parametrize("kind", list(ErrorKind))
    def test_standard_deviation_matches(self, kind):
        draws = perturbed_error_sampler(kind, 0.4, 5, substream(11), 200_000)

        assert draws.mean() == pytest.approx(0.0, abs=0.01)
        assert draws.std() == pytest.approx(0.4, rel=0.02)

    def test_uniform_support(self):
        draws = perturbed_error_sampler(
            ErrorKind.UNIFORM, 0.5, 5, substream(1), 10_000
        )

        assert np.max(np.abs(draws)) <= 0.5 * np.sqrt(3.0)

    def test_chi_squared_is_right_skewed(self):
        draws = perturbed_error_sampler(
            ErrorKind.CHI_SQUARED, 1.0, 5, substream(2), 100_000
        )

        assert stats.skew(draws) > 0.5

    def test_student_t_needs_finite_variance(self):
        with pytest.raises(InvalidArgumentError):
            perturbed_error_sampler(ErrorKind.STUDENT_T, 1.0, 2, substream(1), 10)

    def test_positive_sd_required(self):
        with pytest.raises(InvalidArgumentError):
            perturbed_error_sampler(ErrorKind.NORMAL, 0.0, 5, substream(1), 10)


class TestGenerate:
    """Tests for the cure model data generator."""

    def test_same_seed_same_data(self):
        spec = get_preset("m2-sc1-v1")

        a, _ = generate(spec, substream(5))
        b, _ = generate(spec, substream(5))

        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.covariates, b.covariates)

    def test_latent_data_ignores_error_setting(self):
        spec = get_preset("m1-s1-sc1-c1")
        small = spec.with_overrides(error_sd=(0.3,))
        skewed = spec.with_overrides(error_kind=ErrorKind.CHI_SQUARED)

        observed, latent = generate(spec, substream(8))
        _, latent_small = generate(small, substream(8))
        _, latent_skewed = generate(skewed, substream(8))

        for other in (latent_small, latent_skewed):
            np.testing.assert_array_equal(latent.times, other.times)
            np.testing.assert_array_equal(latent.covariates, other.covariates)
            np.testing.assert_array_equal(latent.cured, other.cured)
        assert not np.array_equal(observed.covariates, latent.covariates)
        np.testing.assert_array_equal(observed.times, latent.times)

    def test_error_free_columns_untouched(self):
        observed, latent = generate(get_preset("m2-sc1-v2"), substream(3))

        np.testing.assert_array_equal(
            observed.covariates[:, 1], latent.covariates[:, 1]
        )
        assert set(np.unique(observed.covariates[:, 1])) <= {0.0, 1.0}

    def test_truncation(self):
        spec = get_preset("m3-sc2-v1").with_overrides(n=2000)

        _, latent = generate(spec, substream(4))

        assert latent.times.max() <= spec.tau
        assert latent.times[latent.status == 1].max() <= spec.tau0
        assert np.all(latent.status[latent.cured] == 0)

    def test_column_layout(self):
        spec = get_preset("m5-sc1-v1").with_overrides(n=50)
        observed, _ = generate(spec, substream(1))

        assert observed.column_names == ("x", "z2")
        assert observed.covariates.shape == (50, 2)

    def test_cure_and_censoring_rates(self):
        spec = get_preset("m1-s1-sc1-c1").with_overrides(n=100_000)

        _, latent = generate(spec, substream(21))

        assert latent.cured.mean() == pytest.approx(spec.cure_rate, abs=0.005)
        censored = 1 - latent.status.mean()
        assert censored == pytest.approx(spec.censoring_rate, abs=0.02)

    @pytest.mark.parametrize("key", sorted(PRESETS))
    def test_every_preset_hits_reported_rates(self, key):
        spec = get_preset(key).with_overrides(n=50_000)

        _, latent = generate(spec, substream(22))

        assert latent.cured.mean() == pytest.approx(spec.cure_rate, abs=0.03)
        censored = 1 - latent.status.mean()
        assert censored == pytest.approx(spec.censoring_rate, abs=0.04)
        assert censored >= latent.cured.mean()
