"""
Monte Carlo Lab Constants

Generator defaults shared by every simulation model and the study method
labels used in result tables.
"""

from enum import Enum

from curesimex.em.constants import EstimatorName


class ErrorKind(str, Enum):
    """True measurement error distribution used when generating data."""

    NORMAL = "normal"
    UNIFORM = "uniform"
    STUDENT_T = "student_t"
    CHI_SQUARED = "chi_squared"


class StudyMethod(str, Enum):
    """Estimation pipelines compared in a study."""

    NAIVE_MLE = "naive-mle"
    NAIVE_PRESMOOTH = "naive-presmooth"
    SIMEX_MLE = "simex-mle"
    SIMEX_PRESMOOTH = "simex-presmooth"

    @property
    def estimator(self) -> EstimatorName:
        if self.value.endswith("mle"):
            return EstimatorName.MLE
        return EstimatorName.PRESMOOTH

    @property
    def uses_simex(self) -> bool:
        return self.value.startswith("simex")


# Weibull proportional hazards baseline mu * t^rho
WEIBULL_RHO = 1.75
WEIBULL_MU = 1.5

DEFAULT_SAMPLE_SIZE = 200
DEFAULT_REPLICATES = 500

# Degrees of freedom of the Student-t and chi-squared error distributions
DEFAULT_ERROR_DF = 5

# (incidence columns, latency columns, column names) per simulation model
MODEL_LAYOUTS: dict[int, tuple[tuple[int, ...], tuple[int, ...], tuple[str, ...]]] = {
    1: ((0,), (0,), ("x",)),
    2: ((0, 1), (0, 1), ("x1", "x2")),
    3: ((0, 1), (0, 2), ("x1", "x2", "z2")),
    4: ((0,), (0, 1), ("x", "z2")),
    5: ((0,), (0, 1), ("x", "z2")),
}
