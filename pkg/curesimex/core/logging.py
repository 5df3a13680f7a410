"""
CureSimex Logging Configuration

Records go to stderr so stdout stays free for results. Batch runs get one
JSON object per record; ``--verbose`` switches to a coloured one-line
layout. Every record carries the run identifier of its CLI invocation and
any context (seed, lambda, replicate) bound through ``get_context_logger``.
"""

import json
import logging
import sys
import time
from collections.abc import Callable
from contextvars import ContextVar
from datetime import datetime, timezone
from functools import wraps
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, TypeVar

from curesimex.core.config import Settings, get_settings


run_id_var: ContextVar[str] = ContextVar("run_id", default="")

# Apps whose records are also written to their own rotating file
APP_LOG_FILES = {
    "curesimex.simex": "simex.log",
    "curesimex.mclab": "mclab.log",
}
ROOT_LOG_FILE = "curesimex.log"

LEVEL_COLORS = {
    logging.DEBUG: "\033[36m",
    logging.INFO: "\033[32m",
    logging.WARNING: "\033[33m",
    logging.ERROR: "\033[31m",
}
RESET = "\033[0m"


def _context(record: logging.LogRecord) -> dict[str, Any]:
    return dict(getattr(record, "extra_data", None) or {})


class JSONFormatter(logging.Formatter):
    """One JSON object per record."""

    def format(self, record: logging.LogRecord) -> str:
        created = datetime.fromtimestamp(record.created, timezone.utc)
        payload = {
            "timestamp": created.isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "run_id": run_id_var.get(),
            "message": record.getMessage(),
            **_context(record),
        }
        return json.dumps(payload, default=str)


class ConsoleFormatter(logging.Formatter):
    """Coloured single-line records for interactive runs."""

    def format(self, record: logging.LogRecord) -> str:
        color = LEVEL_COLORS.get(record.levelno, "")
        level = f"{color}{record.levelname:<7}{RESET}"
        line = f"{level} {record.name}: {record.getMessage()}"
        context = _context(record)
        if context:
            line += " [" + ", ".join(f"{k}={v}" for k, v in context.items()) + "]"
        run_id = run_id_var.get()
        return f"{run_id[:8]} {line}" if run_id else line


def _file_handler(settings: Settings, name: str, level: int) -> RotatingFileHandler:
    handler = RotatingFileHandler(
        Path(settings.log_dir) / name,
        maxBytes=settings.log_max_bytes,
        backupCount=settings.log_backup_count,
    )
    handler.setLevel(level)
    handler.setFormatter(JSONFormatter())
    return handler


def setup_logging(debug: bool | None = None) -> None:
    """Install the stderr handler, plus rotating files when enabled.

    Args:
        debug: Overrides ``Settings.debug`` (the CLI ``--verbose`` flag).
    """
    settings = get_settings()
    debug = settings.debug if debug is None else debug
    level = logging.DEBUG if debug else logging.getLevelName(settings.log_level.upper())
    if not isinstance(level, int):
        level = logging.INFO

    root = logging.getLogger()
    root.setLevel(level)
    root.handlers.clear()
    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(ConsoleFormatter() if debug else JSONFormatter())
    root.addHandler(console)

    if not settings.log_to_file:
        return
    Path(settings.log_dir).mkdir(parents=True, exist_ok=True)
    root.addHandler(_file_handler(settings, ROOT_LOG_FILE, level))
    for app, file_name in APP_LOG_FILES.items():
        app_logger = logging.getLogger(app)
        app_logger.handlers = [_file_handler(settings, file_name, level)]


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


class ContextAdapter(logging.LoggerAdapter):
    """Attaches bound context fields to every record as ``extra_data``."""

    def process(
        self, msg: str, kwargs: dict[str, Any]
    ) -> tuple[str, dict[str, Any]]:
        extra = dict(kwargs.get("extra") or {})
        extra["extra_data"] = dict(self.extra or {})
        kwargs["extra"] = extra
        return msg, kwargs


def get_context_logger(name: str, **context: Any) -> ContextAdapter:
    """Logger whose records carry ``context`` (seed, lambda, replicate...)."""
    return ContextAdapter(get_logger(name), context)


# ============================================================================
# Timing
# ============================================================================

T = TypeVar("T")


def log_performance(
    logger_name: str = "curesimex.performance",
    threshold_ms: float = 60_000.0,
) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """
    Log how long the wrapped call took.

    Calls slower than ``threshold_ms`` are logged at WARNING, others at DEBUG.
    """
    logger = get_logger(logger_name)

    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> T:
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                elapsed_ms = (time.perf_counter() - start) * 1000
                message = f"{func.__name__} took {elapsed_ms:.1f}ms"
                if elapsed_ms > threshold_ms:
                    logger.warning(f"SLOW: {message}")
                else:
                    logger.debug(message)

        return wrapper

    return decorator
