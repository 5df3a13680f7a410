"""
CureSimex Test Configuration

Shared fixtures for the integration and acceptance suites.
"""

from pathlib import Path

import pytest

from curesimex.cli.services import write_dataset_csv
from curesimex.core.config import get_settings
from curesimex.core.random import substream
from curesimex.mclab.generators import generate
from curesimex.mclab.presets import get_preset
from curesimex.mclab.schemas import ScenarioSpec
from curesimex.model.schemas import Dataset, LatentDataset


# ============================================================================
# Settings Fixtures
# ============================================================================


@pytest.fixture(scope="session")
def study_jobs() -> int:
    """Worker count for the long-running studies."""
    return get_settings().jobs


# ============================================================================
# Data Fixtures
# ============================================================================


@pytest.fixture
def model1_spec() -> ScenarioSpec:
    """Model 1, setting 1, 20% cure, 25% censoring, v = 0.7."""
    return get_preset("m1-s1-sc1-c1")


@pytest.fixture
def model1_data(model1_spec: ScenarioSpec) -> tuple[Dataset, LatentDataset]:
    """One Model 1 dataset of 1000 records with its latent truth."""
    return generate(model1_spec.with_overrides(n=1000), substream(2024))


@pytest.fixture
def model2_csv(tmp_path: Path) -> Path:
    """A Model 2 extract written in the CLI input layout."""
    observed, _ = generate(get_preset("m2-sc1-v1").with_overrides(n=200), substream(7))
    path = tmp_path / "model2.csv"
    write_dataset_csv(observed, path)
    return path
