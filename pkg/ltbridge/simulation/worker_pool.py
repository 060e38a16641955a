import multiprocessing
from typing import Callable, Sequence, TypeVar

import numpy as np
import structlog

from ltbridge.common.config import WORKERS

logger = structlog.get_logger()

T = TypeVar("T")

# Set in the parent right before forking, so that unpicklable closures
# (coefficients, drifts) reach the workers by inheritance.
_JOB: Callable[[Sequence[int]], list] | None = None


def _run_slice(indices: Sequence[int]) -> list:
    return _JOB(indices)


def split_indices(indices: Sequence[int], n_parts: int) -> list[np.ndarray]:
    return [part for part in np.array_split(np.asarray(indices, dtype=np.int64), n_parts) if len(part)]


def map_paths(job: Callable[[Sequence[int]], list[T]], indices: Sequence[int], workers: int = WORKERS) -> list[T]:
    """Run ``job`` on slices of ``indices`` and concatenate the results in index order.

    Each path owns its random streams, so the result does not depend on ``workers``.
    """
    global _JOB
    if workers <= 1 or len(indices) < 2 * workers:
        return job(indices)
    parts = split_indices(indices, workers)
    logger.info("starting worker pool", workers=workers, n_paths=len(indices))
    _JOB = job
    try:
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            results = pool.map(_run_slice, parts)
    finally:
        _JOB = None
    return [item for part in results for item in part]
