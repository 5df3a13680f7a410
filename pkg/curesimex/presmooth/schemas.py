"""
Presmoothing Schemas
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from curesimex.core.exceptions import InvalidArgumentError
from curesimex.em.schemas import EmOptions
from curesimex.presmooth.constants import DEFAULT_BANDWIDTH_GRID, KernelFamily


class PresmoothOptions(BaseModel):
    """Bandwidth, kernel and latency EM controls of the presmoothing fit."""

    model_config = ConfigDict(frozen=True)

    bandwidth: Optional[float] = Field(
        default=None, description="Fixed bandwidth; None selects it by cross-validation"
    )
    bandwidth_grid: tuple[float, ...] = DEFAULT_BANDWIDTH_GRID
    kernel: KernelFamily = KernelFamily.EPANECHNIKOV
    standardize: bool = Field(
        default=True, description="Smooth on the standardized continuous covariate"
    )
    em: EmOptions = Field(default_factory=EmOptions)

    @field_validator("bandwidth")
    @classmethod
    def validate_bandwidth(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not v > 0:
            raise InvalidArgumentError("bandwidth must be positive", "bandwidth")
        return v

    @field_validator("bandwidth_grid")
    @classmethod
    def validate_grid(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v:
            raise InvalidArgumentError(
                "bandwidth grid must not be empty", "bandwidth_grid"
            )
        if any(not h > 0 for h in v):
            raise InvalidArgumentError("bandwidths must be positive", "bandwidth_grid")
        return v
