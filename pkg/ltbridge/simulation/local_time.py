import math
from dataclasses import dataclass, field

import numpy as np

from ltbridge.common.config import BAND_FACTOR
from ltbridge.common.errors import DomainError
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.potential import conditional_terminal_lt_law


def default_bandwidth(sigma_at_level: float, dt: float, factor: float = BAND_FACTOR) -> float:
    return factor * sigma_at_level * math.sqrt(dt)


@dataclass
class LocalTimeTracker:
    """Band estimator of the semimartingale local time at ``level``.

    history holds (time, estimate) at band entries and after every in-band step.
    """

    level: float
    bandwidth: float
    value: float = 0.0
    time: float = 0.0
    history: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise DomainError(f"Invalid bandwidth {self.bandwidth}")


def update(tracker: LocalTimeTracker, x_prev: float, sigma_val: float, dt: float) -> LocalTimeTracker:
    """Advance by one step with left-point evaluation: L += sigma^2 dt / (2 eps) inside the band."""
    if dt <= 0:
        raise DomainError(f"Invalid step {dt}")
    t0 = tracker.time
    tracker.time = t0 + dt
    if abs(x_prev - tracker.level) <= tracker.bandwidth:
        if not tracker.history or tracker.history[-1][0] != t0:
            tracker.history.append((t0, tracker.value))
        tracker.value += sigma_val * sigma_val * dt / (2.0 * tracker.bandwidth)
        tracker.history.append((tracker.time, tracker.value))
    return tracker


def inverse_local_time(history: list[tuple[float, float]], a: float) -> float:
    """First time the estimate reaches a, interpolated inside the triggering step; inf if never."""
    if a < 0:
        raise DomainError(f"Invalid local-time level {a}")
    if a == 0:
        return 0.0
    for (t0, l0), (t1, l1) in zip(history, history[1:]):
        if l1 >= a and l1 > l0:
            return t0 + (a - l0) / (l1 - l0) * (t1 - t0)
    return math.inf


class BatchLocalTime:
    """Vectorised tracker for one level over a batch of paths."""

    def __init__(self, level: float, bandwidth: float, n_paths: int):
        if bandwidth <= 0:
            raise DomainError(f"Invalid bandwidth {bandwidth}")
        self.level = level
        self.bandwidth = bandwidth
        self.value = np.zeros(n_paths)

    def update(self, idx: np.ndarray, x_prev: np.ndarray, sigma_val: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
        before = self.value[idx]
        inside = np.abs(x_prev - self.level) <= self.bandwidth
        after = before + np.where(inside, sigma_val * sigma_val * dt / (2.0 * self.bandwidth), 0.0)
        self.value[idx] = after
        return before, after


def complete_terminal_local_time(
    scale: ScaleTable, y: float, x_t: np.ndarray, lt_t: np.ndarray, uniforms: np.ndarray
) -> np.ndarray:
    """Draw L^y_inf for paths alive at the horizon from the conditional law given (X_T, L_T).

    Killed or exited paths (x_t is nan) keep their accumulated value.
    """
    out = np.array(lt_t, dtype=float)
    for i in np.flatnonzero(np.isfinite(x_t)):
        if not scale.spec.contains(float(x_t[i])):
            continue
        law = conditional_terminal_lt_law(scale, float(x_t[i]), y, float(lt_t[i]))
        out[i] = float(law.ppf(uniforms[i]))
    return out
