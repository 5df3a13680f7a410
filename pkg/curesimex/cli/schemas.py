"""
CLI Schemas
"""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from curesimex.core.constants import APP_VERSION


class RunConfig(BaseModel):
    """Resolved parameters of one command, defaults included."""

    model_config = ConfigDict(frozen=True)

    command: str
    seed: Optional[int] = None
    parameters: dict[str, Any] = Field(default_factory=dict)
    version: str = APP_VERSION

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json")
