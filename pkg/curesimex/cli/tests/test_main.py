"""
Command Line Tests
"""

import json
from unittest.mock import patch

import pandas as pd
import pytest

from curesimex.cli.constants import FIT_RESULT_SCHEMA
from curesimex.cli.main import build_parser, main
from curesimex.core.constants import (
    EXIT_ESTIMATION_FAILURE,
    EXIT_INVALID_INPUT,
    EXIT_IO_ERROR,
    EXIT_OK,
)
from curesimex.core.exceptions import EstimationError


def _last_error(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.strip()]
    return json.loads(lines[-1])


@pytest.fixture
def simulated_csv(tmp_path):
    path = tmp_path / "sim.csv"
    code = main(["simulate", "--preset", "m2-sc1-v1", "--n", "150", "--seed", "3", "-o", str(path)])
    assert code == EXIT_OK
    return path


class TestSimulate:
    def test_writes_csv_and_sidecar(self, simulated_csv):
        frame = pd.read_csv(simulated_csv)
        config = json.loads(simulated_csv.with_name("sim.csv.config.json").read_text())

        assert list(frame.columns) == ["time", "status", "x1", "x2"]
        assert len(frame) == 150
        assert config["command"] == "simulate"
        assert config["seed"] == 3

    def test_latent_output(self, tmp_path):
        latent = tmp_path / "latent.csv"

        code = main(
            [
                "simulate",
                "--model",
                "1",
                "--setting",
                "2",
                "--n",
                "40",
                "-o",
                str(tmp_path / "obs.csv"),
                "--latent",
                str(latent),
            ]
        )

        assert code == EXIT_OK
        assert set(pd.read_csv(latent)["cured"]) <= {0, 1}

    def test_same_seed_same_file(self, tmp_path):
        for name in ("a.csv", "b.csv"):
            main(["simulate", "--preset", "m4-sc1-v2", "--n", "30", "-o", str(tmp_path / name)])

        assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()


class TestFit:
    def test_json_matches_result_schema(self, simulated_csv, tmp_path):
        out = tmp_path / "fit.json"

        code = main(["fit", "--data", str(simulated_csv), "--profile", "low=0,0", "-o", str(out)])

        assert code == EXIT_OK
        document = json.loads(out.read_text())
        schema = json.loads(FIT_RESULT_SCHEMA.read_text())
        assert set(schema["required"]) <= set(document)
        assert document["parameter_names"][0] == "gamma:intercept"
        assert len(document["gamma"]) == 3
        assert document["cure_probabilities"][0]["profile"] == "low"
        assert document["config"]["parameters"]["method"] == "mle"

    def test_presmooth_csv_rows(self, simulated_csv, tmp_path):
        out = tmp_path / "fit.csv"

        code = main(
            [
                "fit",
                "--data",
                str(simulated_csv),
                "--method",
                "presmooth",
                "--bandwidth",
                "0.8",
                "--format",
                "csv",
                "-o",
                str(out),
            ]
        )

        assert code == EXIT_OK
        assert pd.read_csv(out)["parameter"].tolist() == [
            "gamma:intercept",
            "gamma:x1",
            "gamma:x2",
            "beta:x1",
            "beta:x2",
        ]

    def test_bad_data_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("time,status,x\n1,1,0\n2,0,1\n3,2,0\n", encoding="utf-8")

        code = main(["fit", "--data", str(path)])

        assert code == EXIT_INVALID_INPUT
        error = _last_error(capsys)
        assert error["error_code"] == "PARSE_ERROR"
        assert error["details"]["line"] == 4

    def test_estimation_failure_exits_3(self, simulated_csv, capsys):
        with patch(
            "curesimex.cli.main.make_fitter",
            side_effect=EstimationError("incidence diverged", "mle"),
        ):
            code = main(["fit", "--data", str(simulated_csv)])

        assert code == EXIT_ESTIMATION_FAILURE
        assert _last_error(capsys)["error_code"] == "ESTIMATION_ERROR"

    def test_unwritable_output_exits_1(self, simulated_csv, tmp_path):
        out = tmp_path / "missing" / "fit.json"

        assert main(["fit", "--data", str(simulated_csv), "-o", str(out)]) == EXIT_IO_ERROR


class TestSimexAndBootstrap:
    def test_simex_json(self, simulated_csv, tmp_path):
        out = tmp_path / "simex.json"

        code = main(
            [
                "simex",
                "--data",
                str(simulated_csv),
                "--error-sd",
                "0.2,0",
                "--B",
                "2",
                "--jobs",
                "1",
                "-o",
                str(out),
            ]
        )

        assert code == EXIT_OK
        document = json.loads(out.read_text())
        assert document["extrapolant"] == "quadratic"
        assert len(document["per_lambda"]) == 5
        assert document["config"]["parameters"]["error_sd"] == [0.2, 0.0]
        assert "jobs" not in document["config"]["parameters"]

    def test_wrong_error_sd_length_exits_2(self, simulated_csv):
        code = main(["simex", "--data", str(simulated_csv), "--error-sd", "0.2"])

        assert code == EXIT_INVALID_INPUT

    def test_bootstrap_json(self, simulated_csv, tmp_path):
        out = tmp_path / "boot.json"

        code = main(
            [
                "bootstrap",
                "--data",
                str(simulated_csv),
                "--n-boot",
                "3",
                "--jobs",
                "1",
                "-o",
                str(out),
            ]
        )

        assert code == EXIT_OK
        parameters = json.loads(out.read_text())["parameters"]
        assert len(parameters) == 5
        assert all(0.0 <= p["p_value"] <= 1.0 for p in parameters)


class TestMcRun:
    def _run(self, tmp_path, name: str, jobs: str) -> str:
        out = tmp_path / name
        code = main(
            [
                "mc-run",
                "--preset",
                "m1-s1-sc1-c1",
                "--n",
                "80",
                "--replicates",
                "2",
                "--jobs",
                jobs,
                "-o",
                str(out),
            ]
        )
        assert code == EXIT_OK
        return out.read_text() + (tmp_path / f"{name}.config.json").read_text()

    def test_rows_and_worker_invariance(self, tmp_path):
        serial = self._run(tmp_path, "serial.csv", "1")
        parallel = self._run(tmp_path, "parallel.csv", "2")

        assert serial.replace("serial", "parallel") == parallel
        rows = pd.read_csv(tmp_path / "serial.csv")
        assert rows["parameter"].tolist() == ["gamma:intercept", "gamma:x", "beta:x"]
        assert set(rows["method"]) == {"naive-mle"}

    def test_needs_exactly_one_study_source(self, capsys):
        code = main(["mc-run", "--preset", "m2-sc1-v1", "--robustness", "variance"])

        assert code == EXIT_INVALID_INPUT
        assert _last_error(capsys)["error_code"] == "VALIDATION_ERROR"

    def test_config_file(self, tmp_path):
        study = tmp_path / "study.ini"
        study.write_text(
            "[DEFAULT]\nreplicates = 2\nsample_size = 60\n\n[a]\npreset = m2-sc1-v1\n",
            encoding="utf-8",
        )
        out = tmp_path / "study.csv"

        assert main(["mc-run", "--config", str(study), "-o", str(out), "--jobs", "1"]) == EXIT_OK
        assert set(pd.read_csv(out)["arm"]) == {"a"}


class TestKaplanMeier:
    def test_curve_rows(self, simulated_csv, tmp_path):
        out = tmp_path / "km.csv"

        assert main(["km", "--data", str(simulated_csv), "-o", str(out)]) == EXIT_OK

        rows = pd.read_csv(out)
        assert rows.iloc[0].tolist() == [0.0, 1.0]
        assert (rows["S"].diff().dropna() <= 0).all()

    def test_grouped_curves(self, simulated_csv, tmp_path):
        out = tmp_path / "km.csv"

        argv = ["km", "--data", str(simulated_csv), "--group", "x2", "-o", str(out)]
        assert main(argv) == EXIT_OK

        rows = pd.read_csv(out)
        assert set(rows["group"]) == {0.0, 1.0}
        assert (rows.groupby("group")["S"].first() == 1.0).all()

    def test_group_by_index(self, simulated_csv, tmp_path):
        by_name = tmp_path / "by_name.csv"
        by_index = tmp_path / "by_index.csv"
        data = str(simulated_csv)

        for group, out in (("x2", by_name), ("1", by_index)):
            argv = ["km", "--data", data, "--group", group, "-o", str(out)]
            assert main(argv) == EXIT_OK

        pd.testing.assert_frame_equal(pd.read_csv(by_index), pd.read_csv(by_name))

    def test_unknown_group(self, simulated_csv, capsys):
        argv = ["km", "--data", str(simulated_csv), "--group", "7"]

        assert main(argv) == EXIT_INVALID_INPUT
        assert _last_error(capsys)["details"] == {"field": "group"}


class TestParser:
    def test_help_shows_defaults(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            build_parser().parse_args(["simex", "--help"])

        assert exc_info.value.code == 0
        out = capsys.readouterr().out
        assert "(default: quadratic)" in out
        assert "--error-sd" in out

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])
