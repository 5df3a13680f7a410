"""
EM Estimator Constants

Solver limits shared by the incidence and latency M-steps.
"""

from enum import Enum


class EstimatorName(str, Enum):
    """Cure model estimators."""

    MLE = "mle"
    PRESMOOTH = "presmooth"


# A linear predictor beyond this magnitude is treated as separation
SEPARATION_ETA = 30.0

MAX_STEP_HALVINGS = 30

# Relative slack allowed on the observed log-likelihood between iterations
ASCENT_SLACK = 1e-10
