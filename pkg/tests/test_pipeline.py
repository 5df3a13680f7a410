"""
End-to-end pipeline tests.

Simulated data flows through ingestion, naive and SIMEX fits, bootstrap
inference and the command line exactly as a user would drive them.
"""

import json

import numpy as np
import pytest

from curesimex.cli.main import main
from curesimex.cli.services import ingest_csv, with_error
from curesimex.core.constants import EXIT_OK
from curesimex.inference.services import EstimatorPipeline, bootstrap_sd
from curesimex.model.services import kaplan_meier
from curesimex.simex.fitters import make_fitter, mle_fitter
from curesimex.simex.schemas import SimexOptions
from curesimex.simex.services import run_simex


pytestmark = pytest.mark.integration


class TestMeasurementErrorCorrection:
    """SIMEX undoes part of the attenuation caused by covariate noise."""

    def test_latent_fit_beats_naive_fit(self, model1_spec, model1_data):
        observed, latent = model1_data
        layout = model1_spec.layout()
        fitter = mle_fitter()

        naive = fitter(observed, layout)
        oracle = fitter(latent, layout)

        assert abs(oracle.beta[0] - 1.0) < abs(naive.beta[0] - 1.0)
        assert naive.beta[0] < oracle.beta[0]

    def test_simex_moves_away_from_naive(self, model1_spec, model1_data):
        observed, _ = model1_data
        layout = model1_spec.layout()
        fitter = mle_fitter()

        naive = fitter(observed, layout)
        corrected = run_simex(observed, layout, fitter, SimexOptions(B=5, seed=1))

        assert corrected.beta_simex[0] > naive.beta[0]
        assert corrected.baseline_simex.is_monotone

    def test_presmoothing_agrees_with_mle(self, model1_spec, model1_data):
        _, latent = model1_data
        layout = model1_spec.layout()

        mle = make_fitter("mle", latent, layout)(latent, layout)
        presmooth = make_fitter("presmooth", latent, layout)(latent, layout)

        np.testing.assert_allclose(presmooth.beta, mle.beta, atol=0.25)
        assert presmooth.bandwidth is not None


class TestFileWorkflow:
    """From a CSV extract to reported numbers."""

    def test_library_and_cli_agree(self, model2_csv, tmp_path):
        data, layout = ingest_csv(model2_csv)
        expected = mle_fitter()(data, layout)
        out = tmp_path / "fit.json"

        assert main(["fit", "--data", str(model2_csv), "-o", str(out)]) == EXIT_OK

        document = json.loads(out.read_text())
        np.testing.assert_allclose(document["gamma"], expected.gamma, rtol=1e-10)
        np.testing.assert_allclose(document["beta"], expected.beta, rtol=1e-10)

    def test_simex_bootstrap(self, model2_csv):
        data, layout = ingest_csv(model2_csv)
        layout = with_error(layout, error_sd=(0.2, 0.0))
        pipeline = EstimatorPipeline("mle", simex=SimexOptions(B=2))

        report = bootstrap_sd(data, layout, pipeline, n_boot=4, seed=3)

        assert report.n_failed == 0
        assert np.all(report.sd > 0)

    def test_km_plateau(self, model2_csv):
        data, _ = ingest_csv(model2_csv)

        curve = kaplan_meier(data)

        # Cured records leave a plateau above the 20% cure rate
        assert curve.values[-1] > 0.1
