"""
Presmoothing Constants

Kernel families and bandwidth selection defaults.
"""

from enum import Enum


class KernelFamily(str, Enum):
    """Kernels for the covariate-weighted product-limit estimator."""

    EPANECHNIKOV = "epanechnikov"
    UNIFORM = "uniform"
    BIWEIGHT = "biweight"
    GAUSSIAN = "gaussian"


DEFAULT_BANDWIDTH_GRID: tuple[float, ...] = tuple(
    round(0.1 * k, 1) for k in range(1, 21)
)

# Selected bandwidths on the standardized covariate are capped here
BANDWIDTH_CAP = 2.0

CV_TIME_POINTS = 50

# Flat criterion tolerance for bandwidth selection
CV_FLAT_TOL = 1e-12

# Columns with at most this many distinct values are matched exactly
DISCRETE_MAX_LEVELS = 5

UNCURE_CLAMP = 1e-6
