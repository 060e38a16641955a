import math

import numpy as np
import structlog

from ltbridge.simulation.euler_engine import Path

logger = structlog.get_logger()


def _crossing_steps(path: Path, z: float, tol: float) -> np.ndarray:
    v = path.values - z
    near = np.abs(v) <= tol
    sign_change = np.zeros_like(near)
    sign_change[1:] = v[:-1] * v[1:] <= 0
    return np.flatnonzero(near | sign_change)


def first_hitting_time(path: Path, z: float, tol: float = 0.0) -> float:
    """First recorded time with a sign change of (value - z) or |value - z| <= tol; inf if none."""
    steps = _crossing_steps(path, z, tol)
    return float(path.times[steps[0]]) if len(steps) else math.inf


def last_passage_time(path: Path, z: float, tol: float = 0.0) -> float:
    """Last recorded crossing time of z; -inf if never crossed.

    A path stopped by the horizon rather than by killing or exit may still
    return to z, so the value is then only a lower bound and a warning is logged.
    """
    steps = _crossing_steps(path, z, tol)
    if not len(steps):
        return -math.inf
    if path.stop_reason == "horizon":
        logger.warning("last passage may be underestimated", level=z, index=path.index, horizon=path.terminal_time)
    return float(path.times[steps[-1]])
