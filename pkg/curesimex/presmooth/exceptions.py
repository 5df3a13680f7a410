"""
Presmoothing Exceptions
"""

from typing import Optional

from curesimex.core.exceptions import EstimationError


class DegenerateWindowError(EstimationError):
    """Raised when every kernel weight of a local window is zero."""

    def __init__(
        self, x0: float, bandwidth: float, group: Optional[str] = None
    ) -> None:
        super().__init__(
            message=(
                f"no records carry kernel weight at x0={x0:.6g} "
                f"with bandwidth {bandwidth:.6g}"
            ),
            estimator="beran",
        )
        self.error_code = "DEGENERATE_WINDOW"
        self.details.update({"x0": x0, "bandwidth": bandwidth})
        if group is not None:
            self.details["group"] = group
