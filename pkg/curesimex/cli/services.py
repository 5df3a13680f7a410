"""
CLI Services

CSV ingestion of survival extracts, covariate layout resolution and result
emission as JSON or CSV.
"""

import json
import math
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from curesimex.cli.constants import (
    CONFIG_SUFFIX,
    STATUS_COLUMN,
    TIME_COLUMN,
    OutputFormat,
)
from curesimex.cli.schemas import RunConfig
from curesimex.core.exceptions import DataParseError, InvalidArgumentError, OutputError
from curesimex.core.logging import get_logger
from curesimex.model.schemas import Dataset, ModelLayout


logger = get_logger(__name__)

# Data rows start on line 2 of the file (line 1 is the header)
_FIRST_DATA_LINE = 2


# ============================================================================
# Ingestion
# ============================================================================


def _first_bad_line(mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask)[0]) + _FIRST_DATA_LINE


def _read_frame(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(
            path, skip_blank_lines=False, dtype=str, keep_default_na=False
        )
    except FileNotFoundError:
        raise DataParseError(f"no such file: {path}", path=str(path))
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataParseError(f"unreadable CSV: {e}", path=str(path))


def _numeric(frame: pd.DataFrame, path: Path) -> pd.DataFrame:
    values = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = values.isna().to_numpy() | ~np.isfinite(values.to_numpy(dtype=float))
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DataParseError(
            f"missing or non-numeric value in column {frame.columns[col]!r}",
            line=int(row) + _FIRST_DATA_LINE,
            path=str(path),
        )
    return values


def resolve_columns(
    spec: Optional[Sequence[str]], names: Sequence[str], field: str
) -> tuple[int, ...]:
    """Column indices from names or 0-based positions; None selects every column."""
    if spec is None:
        return tuple(range(len(names)))
    out = []
    for item in spec:
        item = str(item).strip()
        if item in names:
            out.append(list(names).index(item))
        elif item.isdigit() and int(item) < len(names):
            out.append(int(item))
        else:
            raise InvalidArgumentError(f"unknown covariate column {item!r}", field)
    return tuple(out)


def ingest_csv(
    path: str | Path,
    incidence: Optional[Sequence[str]] = None,
    latency: Optional[Sequence[str]] = None,
    center: Sequence[str] = (),
) -> tuple[Dataset, ModelLayout]:
    """
    Read a survival extract with columns ``time``, ``status`` and covariates.

    Covariates keep their file order. The returned layout carries a zero
    error covariance; incidence and latency default to every covariate.
    """
    path = Path(path)
    frame = _read_frame(path)
    frame.columns = [str(c).strip() for c in frame.columns]
    for required in (TIME_COLUMN, STATUS_COLUMN):
        if required not in frame.columns:
            raise DataParseError(f"missing column {required!r}", line=1, path=str(path))
    if frame.empty:
        raise DataParseError("no data rows", line=_FIRST_DATA_LINE, path=str(path))

    values = _numeric(frame, path)
    times = values[TIME_COLUMN].to_numpy(dtype=float)
    status = values[STATUS_COLUMN].to_numpy(dtype=float)
    if np.any(times < 0):
        raise DataParseError(
            "negative time", line=_first_bad_line(times < 0), path=str(path)
        )
    bad_status = ~np.isin(status, (0.0, 1.0))
    if bad_status.any():
        raise DataParseError(
            "status must be 0 or 1", line=_first_bad_line(bad_status), path=str(path)
        )

    names = [c for c in frame.columns if c not in (TIME_COLUMN, STATUS_COLUMN)]
    data = Dataset(
        times=times,
        status=status.astype(np.int8),
        covariates=values[names].to_numpy(dtype=float).reshape(len(frame), len(names)),
        column_names=tuple(names),
    )
    if center:
        data = data.center_columns(resolve_columns(center, names, "center"))
    layout = ModelLayout(
        incidence_idx=resolve_columns(incidence, names, "incidence"),
        latency_idx=resolve_columns(latency, names, "latency"),
        error_cov=np.zeros((len(names), len(names))),
    )
    logger.info(f"Read {data.n} records with {data.dim} covariates from {path}")
    return data, layout


def load_error_cov(path: str | Path) -> np.ndarray:
    """Square error covariance matrix from a header-less CSV file."""
    try:
        frame = pd.read_csv(path, header=None)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataParseError(f"unreadable error covariance: {e}", path=str(path))
    matrix = frame.to_numpy(dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DataParseError("error covariance must be a square matrix", path=str(path))
    return matrix


def with_error(
    layout: ModelLayout,
    error_sd: Optional[Sequence[float]] = None,
    error_cov: Optional[np.ndarray] = None,
) -> ModelLayout:
    """Layout with the measurement error given per column sd or as a matrix."""
    if error_sd is not None and error_cov is not None:
        raise InvalidArgumentError(
            "give either error sds or an error covariance", "error_sd"
        )
    if error_sd is not None:
        if len(error_sd) != layout.dim:
            raise InvalidArgumentError(
                f"{len(error_sd)} error sds for {layout.dim} covariates", "error_sd"
            )
        return ModelLayout.from_error_sd(
            layout.incidence_idx, layout.latency_idx, error_sd
        )
    if error_cov is not None:
        return layout.with_error_cov(error_cov)
    return layout


def write_dataset_csv(
    data: Dataset,
    path: Optional[str | Path] = None,
    extra: Optional[Mapping[str, np.ndarray]] = None,
    config: Optional[RunConfig] = None,
) -> None:
    """Write a dataset in the layout ``ingest_csv`` reads, plus ``extra`` columns."""
    frame = pd.DataFrame(data.covariates, columns=list(data.column_names))
    frame.insert(0, STATUS_COLUMN, data.status.astype(int))
    frame.insert(0, TIME_COLUMN, data.times)
    for name, column in (extra or {}).items():
        frame[name] = column
    _write_text(frame.to_csv(index=False), path)
    if path is not None and config is not None:
        _write_sidecar(path, config)


# ============================================================================
# Emission
# ============================================================================


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _write_text(text: str, path: Optional[str | Path]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}", str(path))
    logger.info(f"Wrote {path}")


def _write_sidecar(path: str | Path, config: RunConfig) -> None:
    _write_text(json.dumps(config.to_dict(), indent=2) + "\n", f"{path}{CONFIG_SUFFIX}")


def emit_results(
    result: Mapping[str, Any] | Sequence[Mapping[str, Any]],
    fmt: OutputFormat | str = OutputFormat.JSON,
    path: Optional[str | Path] = None,
    config: Optional[RunConfig] = None,
) -> None:
    """
    Write a result document as JSON or a list of rows as CSV.

    JSON documents embed the run config; CSV outputs get it in a sidecar
    ``<path>.config.json`` when written to a file.
    """
    fmt = OutputFormat(fmt)
    if fmt is OutputFormat.JSON:
        document: Any = result
        if config is not None:
            if isinstance(result, Mapping):
                document = {**result, "config": config.to_dict()}
            else:
                document = {"rows": list(result), "config": config.to_dict()}
        _write_text(json.dumps(_jsonable(document), indent=2) + "\n", path)
        return

    rows = [result] if isinstance(result, Mapping) else list(result)
    _write_text(pd.DataFrame(rows).to_csv(index=False), path)
    if path is not None and config is not None:
        _write_sidecar(path, config)
