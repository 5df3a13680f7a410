"""
Declarative study configs.

A study file is a flat INI file with one section per arm::

    [DEFAULT]
    replicates = 500
    method = simex-mle

    [m1-naive]
    preset = m1-s1-sc1-c1
    method = naive-mle

    [m1-simex]
    preset = m1-s1-sc1-c1
    B = 50

Tuple-valued keys (``error_sd``, ``assumed_error_sd``, ``lambdas``) are
comma-separated.
"""

import configparser
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from curesimex.core.exceptions import ConfigurationError, CureSimexError
from curesimex.core.logging import get_logger
from curesimex.mclab.schemas import StudyArm


logger = get_logger(__name__)

_TUPLE_KEYS = ("error_sd", "assumed_error_sd", "lambdas")
_KNOWN_KEYS = set(StudyArm.model_fields) - {"name"}


def _parse_section(name: str, section: configparser.SectionProxy) -> StudyArm:
    values: dict[str, Any] = {"name": name}
    for key, raw in section.items():
        if key not in _KNOWN_KEYS:
            raise ConfigurationError(f"unknown key {key!r} in section [{name}]", key)
        if key in _TUPLE_KEYS:
            try:
                values[key] = tuple(float(v) for v in raw.split(",") if v.strip())
            except ValueError:
                raise ConfigurationError(
                    f"[{name}] {key} must be a list of numbers", key
                )
        else:
            values[key] = raw.strip()
    if "preset" not in values:
        raise ConfigurationError(f"section [{name}] has no preset", "preset")
    try:
        return StudyArm(**values)
    except ValidationError as e:
        raise ConfigurationError(f"invalid section [{name}]: {e}", name)
    except CureSimexError as e:
        raise ConfigurationError(f"invalid section [{name}]: {e.message}", name)


def parse_study_config(text: str) -> list[StudyArm]:
    """Study arms from the contents of a study file, in section order."""
    # Key names are kept as written ("B" stays upper case)
    parser = configparser.ConfigParser()
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigurationError(f"malformed study config: {e}")
    arms = [_parse_section(name, parser[name]) for name in parser.sections()]
    if not arms:
        raise ConfigurationError("study config defines no arms")
    return arms


def load_study_config(path: str | Path) -> list[StudyArm]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read study config {path}: {e}", str(path))
    arms = parse_study_config(text)
    logger.info(f"Loaded {len(arms)} study arms from {path}")
    return arms
