"""
Scenario registry.

Every design of the simulation study is available under a short key:

- ``m1-s{setting}-sc{scenario}-c{cens}`` for Model 1 (v = 0.7)
- ``m{model}-sc{scenario}-v{level}`` for Models 2-5, level 1 = small error,
  level 2 = large error

Robustness arms (extrapolant order, true error distribution, misspecified
error sd) are built on top of the Model 2 presets.
"""

from typing import Optional

from curesimex.core.exceptions import InvalidArgumentError
from curesimex.mclab.constants import (
    DEFAULT_ERROR_DF,
    DEFAULT_REPLICATES,
    ErrorKind,
    StudyMethod,
)
from curesimex.mclab.schemas import ScenarioSpec, StudyArm
from curesimex.simex.constants import Extrapolant


MODEL1_ERROR_SD = 0.7

# setting -> gamma_2; scenario -> (gamma_1, cure); cens level -> (lambda_C, cens rate)
_MODEL1 = {
    1: (0.1, {1: (1.4, 0.20, {1: (0.09, 0.25), 2: (0.3, 0.35)}),
              2: (0.0, 0.50, {1: (0.13, 0.55), 2: (0.5, 0.65)})}),
    2: (0.5, {1: (1.4, 0.20, {1: (0.07, 0.25), 2: (0.26, 0.35)}),
              2: (0.0, 0.50, {1: (0.15, 0.55), 2: (0.6, 0.65)})}),
    3: (2.0, {1: (2.2, 0.20, {1: (0.1, 0.25), 2: (0.33, 0.35)}),
              2: (0.0, 0.50, {1: (0.2, 0.55), 2: (0.7, 0.65)})}),
}

# model -> scenario -> (gamma, beta, lambda_C, (tau0, tau), cure, cens)
_MODELS_2_TO_5: dict[int, dict[int, tuple]] = {
    2: {
        1: ((1.3, 1.0, 0.4), (0.8, 0.3), 0.33, (4.0, 6.0), 0.20, 0.35),
        2: ((1.1, 1.3, -0.3), (2.0, -0.8), 0.08, (10.0, 12.0), 0.30, 0.35),
        3: ((-0.5, 1.5, 1.0), (0.8, 0.3), 0.4, (4.0, 6.0), 0.50, 0.60),
    },
    3: {
        1: ((1.3, 1.0, 0.4), (1.5, 0.5), 0.3, (6.0, 8.0), 0.20, 0.35),
        2: ((1.1, 1.3, -0.3), (1.0, -1.0), 0.1, (6.0, 8.0), 0.30, 0.35),
        3: ((-0.5, 1.5, 1.0), (0.5, 1.5), 0.3, (6.0, 8.0), 0.50, 0.60),
    },
    4: {
        1: ((1.4, 0.5), (0.5, 0.1), 0.3, (5.0, 7.0), 0.20, 0.35),
        2: ((1.4, 2.0), (0.1, 0.5), 0.12, (5.0, 7.0), 0.30, 0.35),
        3: ((0.0, -2.0), (-1.5, 0.5), 0.5, (5.0, 7.0), 0.50, 0.60),
    },
    5: {
        1: ((1.4, 0.5), (0.5, 0.1), 0.3, (4.0, 6.0), 0.20, 0.35),
        2: ((1.4, 2.0), (0.1, -0.5), 0.13, (4.0, 6.0), 0.30, 0.35),
        3: ((0.0, 2.0), (1.0, -1.0), 0.5, (6.0, 8.0), 0.50, 0.60),
    },
}

# model -> (small, large) error sd per covariate column
_ERROR_LEVELS: dict[int, tuple[tuple[float, ...], tuple[float, ...]]] = {
    2: ((0.2, 0.0), (0.4, 0.0)),
    3: ((0.0, 0.0, 0.1), (0.0, 0.0, 0.2)),
    4: ((0.35, 0.2), (0.7, 0.4)),
    5: ((0.0, 0.39), (0.0, 0.78)),
}

# Shift of the assumed error sd in the misspecification arms
MISSPECIFICATION_SHIFT = 0.1


def _build_registry() -> dict[str, ScenarioSpec]:
    registry: dict[str, ScenarioSpec] = {}
    for setting, (gamma2, scenarios) in _MODEL1.items():
        for scenario, (gamma1, cure, levels) in scenarios.items():
            for cens, (rate, censoring) in levels.items():
                key = f"m1-s{setting}-sc{scenario}-c{cens}"
                registry[key] = ScenarioSpec(
                    model_id=1,
                    gamma_true=(gamma1, gamma2),
                    beta_true=(1.0,),
                    censor_rate=rate,
                    tau0=7.0,
                    tau=9.0,
                    error_sd=(MODEL1_ERROR_SD,),
                    label=key,
                    cure_rate=cure,
                    censoring_rate=censoring,
                )

    for model, scenarios in _MODELS_2_TO_5.items():
        for scenario, (gamma, beta, rate, (tau0, tau), cure, cens) in scenarios.items():
            for level, error_sd in enumerate(_ERROR_LEVELS[model], start=1):
                key = f"m{model}-sc{scenario}-v{level}"
                registry[key] = ScenarioSpec(
                    model_id=model,
                    gamma_true=gamma,
                    beta_true=beta,
                    censor_rate=rate,
                    tau0=tau0,
                    tau=tau,
                    error_sd=error_sd,
                    label=key,
                    cure_rate=cure,
                    censoring_rate=cens,
                )
    return registry


PRESETS: dict[str, ScenarioSpec] = _build_registry()


def get_preset(key: str) -> ScenarioSpec:
    try:
        return PRESETS[key]
    except KeyError:
        raise InvalidArgumentError(f"unknown scenario preset {key!r}", "preset")


def preset_key(
    model: int,
    scenario: int,
    setting: Optional[int] = None,
    cens: Optional[int] = None,
    level: Optional[int] = None,
) -> str:
    """Registry key from table coordinates."""
    if model == 1:
        return f"m1-s{setting or 1}-sc{scenario}-c{cens or 1}"
    return f"m{model}-sc{scenario}-v{level or 1}"


# ============================================================================
# Robustness arms
# ============================================================================


def _robustness_base(level: int) -> list[str]:
    if level not in (1, 2):
        raise InvalidArgumentError("error level must be 1 or 2", "level")
    return [f"m2-sc{scenario}-v{level}" for scenario in (1, 2, 3)]


def extrapolant_arms(
    level: int = 1,
    method: StudyMethod = StudyMethod.SIMEX_MLE,
    replicates: int = DEFAULT_REPLICATES,
) -> list[StudyArm]:
    """Model 2 arms comparing linear, quadratic and cubic extrapolants."""
    return [
        StudyArm(
            name=f"{key}-{kind.value}",
            preset=key,
            method=method,
            replicates=replicates,
            extrapolant=kind,
        )
        for key in _robustness_base(level)
        for kind in Extrapolant
    ]


def error_distribution_arms(
    level: int = 1,
    method: StudyMethod = StudyMethod.SIMEX_MLE,
    replicates: int = DEFAULT_REPLICATES,
    df: int = DEFAULT_ERROR_DF,
) -> list[StudyArm]:
    """Model 2 arms with non-Gaussian true errors, corrected with Gaussian SIMEX."""
    kinds = (ErrorKind.UNIFORM, ErrorKind.STUDENT_T, ErrorKind.CHI_SQUARED)
    return [
        StudyArm(
            name=f"{key}-{kind.value}",
            preset=key,
            method=method,
            replicates=replicates,
            error_kind=kind,
            error_df=df,
        )
        for key in _robustness_base(level)
        for kind in kinds
    ]


def misspecified_variance_arms(
    level: int = 1,
    method: StudyMethod = StudyMethod.SIMEX_MLE,
    replicates: int = DEFAULT_REPLICATES,
) -> list[StudyArm]:
    """Model 2 arms where SIMEX assumes v - 0.1 or v + 0.1 instead of v."""
    arms = []
    for key in _robustness_base(level):
        true_sd = PRESETS[key].error_sd
        for sign, tag in ((-1.0, "under"), (1.0, "over")):
            assumed = tuple(
                round(v + sign * MISSPECIFICATION_SHIFT, 10) if v > 0 else 0.0
                for v in true_sd
            )
            arms.append(
                StudyArm(
                    name=f"{key}-{tag}",
                    preset=key,
                    method=method,
                    replicates=replicates,
                    assumed_error_sd=assumed,
                )
            )
    return arms


ROBUSTNESS_STUDIES = {
    "extrapolant": extrapolant_arms,
    "distribution": error_distribution_arms,
    "variance": misspecified_variance_arms,
}
