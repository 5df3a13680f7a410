"""
CureSimex Custom Exceptions

Defines library-specific exceptions for better error handling
and debugging. All exceptions inherit from a base CureSimexError.
"""

from typing import Any, Optional


class CureSimexError(Exception):
    """Base exception for all CureSimex errors."""

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        self.message = message
        self.error_code = error_code or "CURESIMEX_ERROR"
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> dict[str, Any]:
        """Convert exception to dictionary for CLI error output."""
        return {
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details,
        }


# ============================================================================
# Configuration Exceptions
# ============================================================================


class ConfigurationError(CureSimexError):
    """Raised when configuration is invalid or missing."""

    def __init__(self, message: str, config_key: Optional[str] = None) -> None:
        super().__init__(
            message=message,
            error_code="CONFIG_ERROR",
            details={"config_key": config_key} if config_key else {},
        )


# ============================================================================
# Validation Exceptions
# ============================================================================


class InvalidArgumentError(CureSimexError):
    """Raised when an operation receives arguments outside its domain."""

    def __init__(self, message: str, field: Optional[str] = None) -> None:
        super().__init__(
            message=message,
            error_code="VALIDATION_ERROR",
            details={"field": field} if field else {},
        )


class DataParseError(InvalidArgumentError):
    """Raised when an input file cannot be parsed."""

    def __init__(
        self, message: str, line: Optional[int] = None, path: Optional[str] = None
    ) -> None:
        super().__init__(
            message=f"line {line}: {message}" if line is not None else message,
        )
        self.error_code = "PARSE_ERROR"
        self.details = {"line": line, "path": path}


# ============================================================================
# Estimation Exceptions
# ============================================================================


class EstimationError(CureSimexError):
    """Base exception for estimator failures."""

    def __init__(self, message: str, estimator: Optional[str] = None) -> None:
        super().__init__(
            message=message,
            error_code="ESTIMATION_ERROR",
            details={"estimator": estimator} if estimator else {},
        )


class ConvergenceError(EstimationError):
    """Raised when an iterative solver cannot produce a usable iterate."""

    def __init__(self, estimator: str, iterations: int) -> None:
        super().__init__(
            message=f"{estimator} failed to converge after {iterations} iterations",
            estimator=estimator,
        )
        self.error_code = "CONVERGENCE_ERROR"
        self.details["iterations"] = iterations


class FailureThresholdError(EstimationError):
    """Raised when too many cells / replicates of a run fail."""

    def __init__(
        self, stage: str, failed: int, total: int, threshold: float
    ) -> None:
        super().__init__(
            message=(
                f"{stage}: {failed} of {total} fits failed "
                f"(threshold {threshold:.0%})"
            ),
            estimator=stage,
        )
        self.error_code = "FAILURE_THRESHOLD_EXCEEDED"
        self.details.update(
            {"failed": failed, "total": total, "threshold": threshold}
        )


# ============================================================================
# Output Exceptions
# ============================================================================


class OutputError(CureSimexError):
    """Raised when results cannot be written."""

    def __init__(self, message: str, path: Optional[str] = None) -> None:
        super().__init__(
            message=message,
            error_code="IO_ERROR",
            details={"path": path} if path else {},
        )
