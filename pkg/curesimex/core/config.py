"""
CureSimex Configuration Module

Environment variables and library settings using Pydantic Settings.
"""

import os
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


def _available_cores() -> int:
    return os.cpu_count() or 1


class Settings(BaseSettings):
    """
    Library settings loaded from environment variables (prefix CURESIMEX_).

    Groups:
        - Application
        - Parallelism / reproducibility
        - Estimation defaults
        - Failure thresholds
        - Logging
    """

    model_config = SettingsConfigDict(
        env_prefix="CURESIMEX_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ----------------------------
    # Core Application
    # ----------------------------
    app_name: str = "CureSimex"
    debug: bool = False

    # ----------------------------
    # Parallelism / reproducibility
    # ----------------------------
    jobs: int = Field(default_factory=_available_cores, ge=1)
    default_seed: int = Field(default=20240101, ge=0)

    # ----------------------------
    # Estimation defaults
    # ----------------------------
    em_max_iter: int = Field(default=500, ge=1)
    em_tol: float = Field(default=1e-7, gt=0)
    simex_B: int = Field(default=50, ge=1)
    bootstrap_n_boot: int = Field(default=1000, ge=2)

    # ----------------------------
    # Failure thresholds (fraction of dropped cells / replicates)
    # ----------------------------
    simex_failure_threshold: float = Field(default=0.20, ge=0, le=1)
    study_failure_threshold: float = Field(default=0.10, ge=0, le=1)
    bootstrap_failure_threshold: float = Field(default=0.20, ge=0, le=1)

    # ----------------------------
    # Logging
    # ----------------------------
    log_level: str = "INFO"
    log_dir: str = "logs"
    log_to_file: bool = False
    log_max_bytes: int = 5 * 1024 * 1024  # 5MB
    log_backup_count: int = 5


@lru_cache
def get_settings() -> Settings:
    """Return cached settings instance."""
    return Settings()
