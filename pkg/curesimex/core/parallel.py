"""
Order-preserving parallel map.

Work items are dispatched to a process pool and results come back in input
order, so every reduction downstream runs in a fixed index order and results
do not depend on the worker count.
"""

from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

from curesimex.core.config import get_settings
from curesimex.core.logging import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_jobs(jobs: int | None) -> int:
    """Worker count: explicit value, else the configured default."""
    if jobs is None:
        return get_settings().jobs
    return max(1, int(jobs))


def ordered_map(
    func: Callable[[T], R],
    items: Iterable[T],
    jobs: int | None = 1,
    chunksize: int = 1,
) -> list[R]:
    """
    Apply ``func`` to every item, in parallel when ``jobs > 1``.

    ``func`` and the items must be picklable when running in parallel
    (module-level functions or ``functools.partial`` of them).
    """
    work: Sequence[T] = list(items)
    workers = min(resolve_jobs(jobs), max(1, len(work)))
    if workers == 1:
        return [func(item) for item in work]

    logger.debug(f"Dispatching {len(work)} tasks to {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, work, chunksize=chunksize))
