"""
Worker pool for element- and face-wise computations

Results always come back in input order, so anything summed from them is
independent of the number of workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from .config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_jobs = max(1, settings.jobs)


def set_jobs(jobs: int) -> None:
    """Cap the number of worker threads (the CLI's --jobs)"""
    global _jobs
    _jobs = max(1, int(jobs))
    logger.debug(f"worker threads capped at {_jobs}")


def get_jobs() -> int:
    return _jobs


def ordered_map(func: Callable[[T], R], items: Sequence[T], jobs: int = 0) -> List[R]:
    """
    Apply func to every item, returning results in item order

    Args:
        func: Pure function of one item
        items: Work items
        jobs: Worker threads (0 = process default)
    """
    workers = jobs or _jobs
    if workers <= 1 or len(items) < 2:
        return [func(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunk))
