"""
curesimex command line

Subcommands:
    fit        fit the mixture cure model to a CSV extract
    simex      SIMEX-corrected fit for mismeasured covariates
    simulate   draw a dataset from a simulation preset
    mc-run     run a Monte Carlo study
    bootstrap  bootstrap standard deviations and Wald p-values
    km         Kaplan-Meier curve, optionally by group

Exit codes: 0 success, 1 I/O error, 2 invalid input, 3 estimation failure.
"""

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Callable, Optional
from uuid import uuid4

import numpy as np
from pydantic import ValidationError

from curesimex.cli.constants import EXECUTION_ONLY_ARGS, OutputFormat
from curesimex.cli.schemas import RunConfig
from curesimex.cli.services import (
    emit_results,
    ingest_csv,
    load_error_cov,
    resolve_columns,
    with_error,
    write_dataset_csv,
)
from curesimex.core.config import get_settings
from curesimex.core.constants import (
    APP_VERSION,
    EXIT_ESTIMATION_FAILURE,
    EXIT_INVALID_INPUT,
    EXIT_IO_ERROR,
    EXIT_OK,
)
from curesimex.core.exceptions import (
    ConfigurationError,
    CureSimexError,
    EstimationError,
    InvalidArgumentError,
)
from curesimex.core.logging import get_logger, run_id_var, setup_logging
from curesimex.core.random import substream
from curesimex.em.constants import EstimatorName
from curesimex.em.schemas import EmOptions
from curesimex.inference.services import (
    EstimatorPipeline,
    bootstrap_sd,
    cure_probability_table,
)
from curesimex.mclab.config import load_study_config
from curesimex.mclab.constants import DEFAULT_REPLICATES, ErrorKind, StudyMethod
from curesimex.mclab.generators import generate
from curesimex.mclab.presets import ROBUSTNESS_STUDIES, get_preset, preset_key
from curesimex.mclab.schemas import StudyArm
from curesimex.mclab.services import StudyOptions, run_arms
from curesimex.model.schemas import CureFit, Dataset, ModelLayout
from curesimex.model.services import (
    kaplan_meier,
    kaplan_meier_by_group,
    plateau_fraction,
)
from curesimex.presmooth.constants import KernelFamily
from curesimex.presmooth.schemas import PresmoothOptions
from curesimex.simex.constants import DEFAULT_LAMBDAS, Extrapolant
from curesimex.simex.fitters import CureFitter, make_fitter
from curesimex.simex.schemas import SimexOptions
from curesimex.simex.services import run_simex


logger = get_logger(__name__)


# ============================================================================
# Argument types
# ============================================================================


def _names(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _floats(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in _names(value))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {value!r}"
        )


def _profile(value: str) -> tuple[str, tuple[float, ...]]:
    name, sep, covariates = value.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=x1,x2,..., got {value!r}")
    return name.strip(), _floats(covariates)


# ============================================================================
# Parser
# ============================================================================


def _add_verbose(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--verbose", action="store_true", help="debug logging on stderr")


def _add_jobs(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--jobs",
        type=int,
        default=get_settings().jobs,
        help="worker processes (env CURESIMEX_JOBS); results do not depend on it",
    )


def _add_seed(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--seed", type=int, default=get_settings().default_seed, help="master seed"
    )


def _add_output(sub: argparse.ArgumentParser, fmt: OutputFormat) -> None:
    sub.add_argument(
        "--output",
        "-o",
        type=Path,
        default=None,
        help="output file (stdout if omitted)",
    )
    sub.add_argument(
        "--format",
        choices=[f.value for f in OutputFormat],
        default=fmt.value,
        help="output format",
    )


def _add_data(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--data",
        type=Path,
        required=True,
        help="CSV with time, status and covariates",
    )
    sub.add_argument(
        "--incidence",
        type=_names,
        default=None,
        help="incidence covariates (names or positions; all if omitted)",
    )
    sub.add_argument(
        "--latency",
        type=_names,
        default=None,
        help="latency covariates (names or positions; all if omitted)",
    )
    sub.add_argument(
        "--center", type=_names, default=[], help="covariates to mean-center"
    )


def _add_estimator(sub: argparse.ArgumentParser) -> None:
    settings = get_settings()
    sub.add_argument(
        "--method",
        choices=[m.value for m in EstimatorName],
        default=EstimatorName.MLE.value,
        help="estimator",
    )
    sub.add_argument(
        "--tau0",
        type=float,
        default=None,
        help="cure horizon (last event time if omitted)",
    )
    sub.add_argument(
        "--max-iter", type=int, default=settings.em_max_iter, help="EM iteration cap"
    )
    sub.add_argument(
        "--tol", type=float, default=settings.em_tol, help="EM convergence tolerance"
    )
    sub.add_argument(
        "--bandwidth",
        type=float,
        default=None,
        help="presmoothing bandwidth (cross-validated if omitted)",
    )
    sub.add_argument(
        "--kernel",
        choices=[k.value for k in KernelFamily],
        default=KernelFamily.EPANECHNIKOV.value,
        help="presmoothing kernel",
    )


def _add_error(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--error-sd",
        type=_floats,
        default=None,
        help="measurement error sd per covariate",
    )
    sub.add_argument(
        "--error-cov",
        type=Path,
        default=None,
        help="CSV file with the error covariance matrix",
    )


def _add_simex(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--lambdas", type=_floats, default=DEFAULT_LAMBDAS, help="noise levels"
    )
    sub.add_argument(
        "--B",
        type=int,
        default=get_settings().simex_B,
        help="contaminated datasets per level",
    )
    sub.add_argument(
        "--extrapolant",
        choices=[e.value for e in Extrapolant],
        default=Extrapolant.QUADRATIC.value,
        help="extrapolation curve",
    )
    sub.add_argument(
        "--isotonize",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="repair a non-monotone extrapolated baseline",
    )


def _add_profiles(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--profile",
        type=_profile,
        action="append",
        default=None,
        help="NAME=x1,x2,... incidence profile for the cure table (repeatable)",
    )


def _add_simulate(subparsers: Any) -> None:
    sub = _subparser(
        subparsers, "simulate", "draw a dataset from a simulation preset", cmd_simulate
    )
    sub.add_argument(
        "--preset", default=None, help="preset key (overrides the table coordinates)"
    )
    sub.add_argument(
        "--model", type=int, choices=range(1, 6), default=1, help="simulation model"
    )
    sub.add_argument(
        "--setting", type=int, choices=(1, 2, 3), default=1, help="Model 1 setting"
    )
    sub.add_argument(
        "--scenario", type=int, choices=(1, 2, 3), default=1, help="scenario"
    )
    sub.add_argument(
        "--cens", type=int, choices=(1, 2), default=1, help="Model 1 censoring level"
    )
    sub.add_argument(
        "--level", type=int, choices=(1, 2), default=1, help="error level of Models 2-5"
    )
    sub.add_argument(
        "--n", type=int, default=None, help="sample size (preset value if omitted)"
    )
    sub.add_argument(
        "--error-kind",
        choices=[k.value for k in ErrorKind],
        default=None,
        help="true error distribution (preset value if omitted)",
    )
    sub.add_argument(
        "--error-df",
        type=int,
        default=None,
        help="degrees of freedom of t / chi-squared errors",
    )
    sub.add_argument(
        "--latent",
        type=Path,
        default=None,
        help="also write the error-free data with cure status",
    )
    _add_seed(sub)
    sub.add_argument(
        "--output",
        "-o",
        type=Path,
        default=None,
        help="output CSV (stdout if omitted)",
    )


def _add_mc_run(subparsers: Any) -> None:
    sub = _subparser(subparsers, "mc-run", "run a Monte Carlo study", cmd_mc_run)
    sub.add_argument(
        "--config", type=Path, default=None, help="INI study file, one section per arm"
    )
    sub.add_argument("--preset", default=None, help="single-arm study on this preset")
    sub.add_argument(
        "--robustness",
        choices=sorted(ROBUSTNESS_STUDIES),
        default=None,
        help="built-in robustness study on Model 2",
    )
    sub.add_argument(
        "--level",
        type=int,
        choices=(1, 2),
        default=1,
        help="error level of the robustness study",
    )
    sub.add_argument(
        "--method",
        choices=[m.value for m in StudyMethod],
        default=StudyMethod.NAIVE_MLE.value,
        help="estimation method of --preset / --robustness arms",
    )
    sub.add_argument(
        "--replicates",
        type=int,
        default=None,
        help="replicates per arm (arm value if omitted)",
    )
    sub.add_argument(
        "--n", type=int, default=None, help="sample size of a --preset arm"
    )
    sub.add_argument(
        "--B", type=int, default=get_settings().simex_B, help="SIMEX datasets per level"
    )
    _add_seed(sub)
    _add_jobs(sub)
    _add_output(sub, OutputFormat.CSV)


def _add_bootstrap(subparsers: Any) -> None:
    sub = _subparser(
        subparsers,
        "bootstrap",
        "bootstrap standard deviations and Wald p-values",
        cmd_bootstrap,
    )
    _add_data(sub)
    _add_estimator(sub)
    _add_error(sub)
    _add_simex(sub)
    sub.add_argument(
        "--simex",
        action="store_true",
        help="bootstrap the SIMEX-corrected estimator",
    )
    sub.add_argument(
        "--n-boot",
        type=int,
        default=get_settings().bootstrap_n_boot,
        help="bootstrap resamples",
    )
    _add_seed(sub)
    _add_jobs(sub)
    _add_output(sub, OutputFormat.JSON)


def _subparser(
    subparsers: Any,
    name: str,
    help_text: str,
    handler: Callable[[argparse.Namespace], None],
) -> argparse.ArgumentParser:
    sub = subparsers.add_parser(
        name,
        help=help_text,
        description=help_text,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub.set_defaults(handler=handler)
    _add_verbose(sub)
    return sub


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curesimex",
        description=(
            "Mixture cure models with SIMEX correction for covariate measurement error"
        ),
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {APP_VERSION}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    fit = _subparser(subparsers, "fit", "fit the mixture cure model", cmd_fit)
    _add_data(fit)
    _add_estimator(fit)
    _add_profiles(fit)
    _add_output(fit, OutputFormat.JSON)

    simex = _subparser(
        subparsers, "simex", "SIMEX-corrected mixture cure fit", cmd_simex
    )
    _add_data(simex)
    _add_estimator(simex)
    _add_error(simex)
    _add_simex(simex)
    _add_profiles(simex)
    _add_seed(simex)
    _add_jobs(simex)
    _add_output(simex, OutputFormat.JSON)

    _add_simulate(subparsers)
    _add_mc_run(subparsers)
    _add_bootstrap(subparsers)

    km = _subparser(subparsers, "km", "Kaplan-Meier curve as (t, S) rows", cmd_km)
    km.add_argument(
        "--data",
        type=Path,
        required=True,
        help="CSV with time, status and covariates",
    )
    km.add_argument(
        "--group", default=None, help="covariate to stratify by (name or 0-based index)"
    )
    _add_output(km, OutputFormat.CSV)

    return parser


# ============================================================================
# Helpers
# ============================================================================


def _run_config(args: argparse.Namespace) -> RunConfig:
    parameters = {}
    for key, value in vars(args).items():
        if key in EXECUTION_ONLY_ARGS or key in ("command", "seed"):
            continue
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, tuple):
            value = list(value)
        parameters[key] = value
    return RunConfig(
        command=args.command,
        seed=getattr(args, "seed", None),
        parameters=parameters,
    )


def _em_options(args: argparse.Namespace) -> EmOptions:
    return EmOptions(max_iter=args.max_iter, tol=args.tol, tau0=args.tau0)


def _presmooth_options(args: argparse.Namespace, em: EmOptions) -> PresmoothOptions:
    return PresmoothOptions(bandwidth=args.bandwidth, kernel=args.kernel, em=em)


def _simex_options(args: argparse.Namespace) -> SimexOptions:
    return SimexOptions(
        lambdas=args.lambdas,
        B=args.B,
        extrapolant=args.extrapolant,
        isotonize=args.isotonize,
        seed=args.seed,
        jobs=args.jobs,
    )


def _load_data(args: argparse.Namespace) -> tuple[Dataset, ModelLayout]:
    data, layout = ingest_csv(args.data, args.incidence, args.latency, args.center)
    error_sd = getattr(args, "error_sd", None)
    error_cov = getattr(args, "error_cov", None)
    if error_sd is not None or error_cov is not None:
        cov = load_error_cov(error_cov) if error_cov is not None else None
        layout = with_error(layout, error_sd, cov)
    return data, layout


def _fitter(args: argparse.Namespace, data: Dataset, layout: ModelLayout) -> CureFitter:
    em = _em_options(args)
    return make_fitter(
        args.method, data, layout, em=em, presmooth=_presmooth_options(args, em)
    )


def _parameter_rows(names: Sequence[str], params: np.ndarray) -> list[dict[str, Any]]:
    return [{"parameter": name, "estimate": float(v)} for name, v in zip(names, params)]


def _with_profiles(
    payload: dict[str, Any], fit: CureFit, args: argparse.Namespace
) -> dict[str, Any]:
    if args.profile:
        table = cure_probability_table(fit, dict(args.profile))
        payload["cure_probabilities"] = [row.model_dump() for row in table]
    return payload


# ============================================================================
# Commands
# ============================================================================


def cmd_fit(args: argparse.Namespace) -> None:
    data, layout = _load_data(args)
    fit = _fitter(args, data, layout)(data, layout)
    names = layout.parameter_names(data.column_names)
    config = _run_config(args)
    if args.format == OutputFormat.CSV.value:
        rows = _parameter_rows(names, fit.params)
        emit_results(rows, args.format, args.output, config)
        return
    payload = _with_profiles({**fit.to_dict(), "parameter_names": names}, fit, args)
    emit_results(payload, args.format, args.output, config)


def cmd_simex(args: argparse.Namespace) -> None:
    data, layout = _load_data(args)
    fitter = _fitter(args, data, layout)
    result = run_simex(data, layout, fitter, _simex_options(args), method=args.method)
    names = layout.parameter_names(data.column_names)
    config = _run_config(args)
    if args.format == OutputFormat.CSV.value:
        rows = _parameter_rows(names, result.params)
        emit_results(rows, args.format, args.output, config)
        return
    payload = {**result.to_dict(), "parameter_names": names}
    if args.profile:
        payload = _with_profiles(payload, result.as_cure_fit(), args)
    emit_results(payload, args.format, args.output, config)


def cmd_simulate(args: argparse.Namespace) -> None:
    key = args.preset or preset_key(
        args.model,
        args.scenario,
        setting=args.setting,
        cens=args.cens,
        level=args.level,
    )
    spec = get_preset(key).with_overrides(
        n=args.n, error_kind=args.error_kind, error_df=args.error_df
    )
    observed, latent = generate(spec, substream(args.seed))
    logger.info(
        f"Simulated {key}: n={observed.n}, cured={latent.cured.mean():.3f}, "
        f"censored={1.0 - observed.status.mean():.3f}"
    )
    write_dataset_csv(observed, args.output, config=_run_config(args))
    if args.latent is not None:
        cured = {"cured": latent.cured.astype(int)}
        write_dataset_csv(latent, args.latent, extra=cured)


def _study_arms(args: argparse.Namespace) -> list[StudyArm]:
    sources = [args.config, args.preset, args.robustness]
    if sum(source is not None for source in sources) != 1:
        raise InvalidArgumentError(
            "give exactly one of --config, --preset, --robustness", "config"
        )
    if args.config is not None:
        return load_study_config(args.config)
    if args.robustness is not None:
        kwargs: dict[str, Any] = {
            "level": args.level,
            "method": StudyMethod(args.method),
        }
        if args.replicates is not None:
            kwargs["replicates"] = args.replicates
        return ROBUSTNESS_STUDIES[args.robustness](**kwargs)
    return [
        StudyArm(
            name=f"{args.preset}-{args.method}",
            preset=args.preset,
            method=args.method,
            replicates=args.replicates or DEFAULT_REPLICATES,
            sample_size=args.n,
        )
    ]


def cmd_mc_run(args: argparse.Namespace) -> None:
    arms = _study_arms(args)
    opts = StudyOptions(simex=SimexOptions(B=args.B, seed=args.seed))
    result = run_arms(
        arms,
        opts=opts,
        seed=args.seed,
        jobs=args.jobs,
        replicates=args.replicates,
    )
    emit_results(result.rows(), args.format, args.output, _run_config(args))


def cmd_bootstrap(args: argparse.Namespace) -> None:
    data, layout = _load_data(args)
    em = _em_options(args)
    pipeline = EstimatorPipeline(
        args.method,
        simex=_simex_options(args) if args.simex else None,
        em=em,
        presmooth=_presmooth_options(args, em),
    )
    report = bootstrap_sd(
        data,
        layout,
        pipeline,
        n_boot=args.n_boot,
        seed=args.seed,
        jobs=args.jobs,
        names=layout.parameter_names(data.column_names),
    )
    if args.format == OutputFormat.CSV.value:
        emit_results(report.rows(), args.format, args.output, _run_config(args))
    else:
        emit_results(report.to_dict(), args.format, args.output, _run_config(args))


def cmd_km(args: argparse.Namespace) -> None:
    data, _ = ingest_csv(args.data)
    logger.info(f"Plateau fraction beyond the last event: {plateau_fraction(data):.3f}")
    if args.group is None:
        curves = {None: kaplan_meier(data)}
    else:
        (column,) = resolve_columns([args.group], data.column_names, "group")
        curves = dict(kaplan_meier_by_group(data, column))
    rows = []
    for group, curve in curves.items():
        prefix = {} if group is None else {"group": group}
        rows.append({**prefix, "t": 0.0, "S": 1.0})
        rows.extend(
            {**prefix, "t": float(t), "S": float(s)}
            for t, s in zip(curve.times, curve.values)
        )
    emit_results(rows, args.format, args.output, _run_config(args))


# ============================================================================
# Entry point
# ============================================================================


def _fail(payload: dict[str, Any], code: int) -> int:
    sys.stderr.write(json.dumps(payload, default=str) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(debug=args.verbose)
    run_id_var.set(uuid4().hex[:12])
    logger.debug(f"Running {args.command}")

    try:
        args.handler(args)
    except (InvalidArgumentError, ConfigurationError) as e:
        logger.error(f"Invalid input: {e.message}")
        return _fail(e.to_dict(), EXIT_INVALID_INPUT)
    except ValidationError as e:
        logger.error(f"Invalid input: {e}")
        return _fail(
            {
                "error_code": "VALIDATION_ERROR",
                "message": str(e),
                "details": {"errors": e.errors(include_url=False)},
            },
            EXIT_INVALID_INPUT,
        )
    except EstimationError as e:
        logger.error(f"Estimation failed: {e.message}")
        return _fail(e.to_dict(), EXIT_ESTIMATION_FAILURE)
    except CureSimexError as e:
        logger.error(f"{e.error_code}: {e.message}")
        return _fail(e.to_dict(), EXIT_IO_ERROR)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
