"""
CLI Constants
"""

from enum import Enum
from pathlib import Path


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


TIME_COLUMN = "time"
STATUS_COLUMN = "status"

FIT_RESULT_SCHEMA = Path(__file__).with_name("fit_result.schema.json")

# Sidecar written next to CSV outputs
CONFIG_SUFFIX = ".config.json"

# Arguments that control execution only and never enter the recorded config
EXECUTION_ONLY_ARGS = frozenset({"jobs", "verbose", "handler", "output", "format"})
