from dataclasses import dataclass
from typing import Sequence

import numpy as np
import structlog

from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.simulation.euler_engine import ExitSide, Path, StopRule, exit_side, simulate_batch
from ltbridge.simulation.local_time import complete_terminal_local_time
from ltbridge.simulation.random_source import aux_uniforms

logger = structlog.get_logger()


@dataclass
class TerminalLocalTimes:
    values: np.ndarray
    sides: list[ExitSide]
    completed: np.ndarray
    paths: list[Path]


def terminal_local_times(
    scale: ScaleTable, x: float, y: float, horizon: float, dt: float, seed: int, indices: Sequence[int], **engine_options
) -> TerminalLocalTimes:
    """L^y_inf estimates of direct paths from x.

    Paths still alive at the horizon get their remaining local time drawn from
    the conditional law given (X_T, L_T); their exit side stays "none".
    """
    engine_options.setdefault("record_every", None)
    paths = simulate_batch(
        scale.spec, None, x, StopRule(horizon=horizon), dt, seed, indices, scale=scale, lt_levels=(y,), **engine_options
    )
    sides = [exit_side(scale.spec, scale, p) for p in paths]
    lt = np.array([p.local_time[y] for p in paths])
    alive = np.array([p.stop_reason == "horizon" for p in paths])
    x_t = np.where(alive, [p.terminal_value for p in paths], np.nan)
    values = complete_terminal_local_time(scale, y, x_t, lt, aux_uniforms(seed, indices, 1)[:, 0])
    if alive.any():
        logger.info("completed terminal local times past the horizon", model=scale.spec.name, alive=int(alive.sum()), horizon=horizon)
    return TerminalLocalTimes(values=values, sides=sides, completed=alive, paths=paths)
