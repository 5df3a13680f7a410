"""
Smoothing kernels on a standardized scale.
"""

from collections.abc import Callable

import numpy as np
from scipy.stats import norm

from curesimex.presmooth.constants import KernelFamily


def _epanechnikov(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u**2), 0.0)


def _uniform(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


def _biweight(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) <= 1.0, 0.9375 * (1.0 - u**2) ** 2, 0.0)


KERNELS: dict[KernelFamily, Callable[[np.ndarray], np.ndarray]] = {
    KernelFamily.EPANECHNIKOV: _epanechnikov,
    KernelFamily.UNIFORM: _uniform,
    KernelFamily.BIWEIGHT: _biweight,
    KernelFamily.GAUSSIAN: norm.pdf,
}


def kernel_weights(
    x: np.ndarray, x0: np.ndarray, bandwidth: float, family: KernelFamily
) -> np.ndarray:
    """Matrix K((x_i - x0_k) / h) with one row per evaluation point x0_k."""
    u = (np.asarray(x, dtype=float)[None, :] - np.atleast_1d(x0)[:, None]) / bandwidth
    return KERNELS[KernelFamily(family)](u)
