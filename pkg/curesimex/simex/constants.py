"""
SIMEX Constants
"""

from enum import Enum


class Extrapolant(str, Enum):
    """Polynomial extrapolation curves in lambda."""

    LINEAR = "linear"
    QUADRATIC = "quadratic"
    CUBIC = "cubic"

    @property
    def degree(self) -> int:
        return {"linear": 1, "quadratic": 2, "cubic": 3}[self.value]


DEFAULT_LAMBDAS: tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0)

# Extrapolation target: the error-free level
EXTRAPOLATION_POINT = -1.0
