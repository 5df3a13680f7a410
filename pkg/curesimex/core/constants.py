"""Core module constants."""

# Application
APP_NAME = "CureSimex"
APP_VERSION = "1.0.0"

# Probabilities are clamped to [PROB_CLAMP, 1 - PROB_CLAMP] inside
# likelihood evaluations only, never in reported predictions.
PROB_CLAMP = 1e-12

# Negative eigenvalues of an error covariance above this are clipped to 0
PSD_TOLERANCE = 1e-10

# Results are multiplied by this factor for presentation
REPORT_SCALE = 100.0

# CLI exit codes
EXIT_OK = 0
EXIT_IO_ERROR = 1
EXIT_INVALID_INPUT = 2
EXIT_ESTIMATION_FAILURE = 3
