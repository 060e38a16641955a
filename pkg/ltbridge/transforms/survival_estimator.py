import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import structlog

from ltbridge.common.errors import ConfigError, DegenerateBatchError
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.potential import potential_density, terminal_lt_rate
from ltbridge.simulation.euler_engine import Path, StopRule, simulate_batch
from ltbridge.transforms.drifts import TransformedSpec

logger = structlog.get_logger()


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    n: int

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "MonteCarloEstimate":
        samples = np.asarray(samples, dtype=float)
        if len(samples) < 2:
            raise DegenerateBatchError(f"need at least two samples, got {len(samples)}")
        return cls(float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(len(samples))), len(samples))


def recurrent_likelihood_ratio(scale: ScaleTable, y: float, x: float, a: float) -> float:
    """Density of the recurrent transform against the original law on the paths up to tau_{a-}."""
    return potential_density(scale, y, y) / potential_density(scale, x, y) * math.exp(terminal_lt_rate(scale, y) * a)


def survival_weights(scale: ScaleTable, y: float, x: float, horizon: float, paths: Sequence[Path]) -> np.ndarray:
    u_xy = potential_density(scale, x, y)
    lam = terminal_lt_rate(scale, y)
    weights = np.zeros(len(paths))
    for i, path in enumerate(paths):
        if y not in path.local_time:
            raise ConfigError(f"path {path.index} carries no local-time tracker at y={y}")
        # discretization can still kill a recurrent path at a finite boundary; it contributes 0
        if path.killed or path.terminal_time < horizon - 1e-9 or not scale.spec.contains(path.terminal_value):
            continue
        weights[i] = u_xy / potential_density(scale, path.terminal_value, y) * math.exp(-lam * path.local_time[y])
    return weights


def survival_estimator(scale: ScaleTable, y: float, x: float, horizon: float, paths: Sequence[Path]) -> MonteCarloEstimate:
    """Importance-sampling estimate of P^x(zeta > horizon) from recurrent-transform paths."""
    if not paths:
        raise DegenerateBatchError("no paths to estimate survival from")
    return MonteCarloEstimate.from_samples(survival_weights(scale, y, x, horizon, paths))


def sample_recurrent_paths(
    scale: ScaleTable, y: float, x: float, horizon: float, dt: float, seed: int, indices: Sequence[int], **engine_options
) -> list[Path]:
    spec_t = TransformedSpec(scale, "recurrent", y)
    engine_options.setdefault("record_every", None)
    return simulate_batch(
        scale.spec,
        spec_t.batch_drift(),
        x,
        StopRule(horizon=horizon, boundary_exit=False),
        dt,
        seed,
        indices,
        domain=spec_t.engine_domain(),
        lt_levels=(y,),
        **engine_options,
    )


def survival_by_recurrent_transform(
    scale: ScaleTable, y: float, x: float, horizon: float, dt: float, seed: int, n_paths: int, first_index: int = 0, **engine_options
) -> MonteCarloEstimate:
    indices = range(first_index, first_index + n_paths)
    paths = sample_recurrent_paths(scale, y, x, horizon, dt, seed, indices, **engine_options)
    estimate = survival_estimator(scale, y, x, horizon, paths)
    logger.info("survival estimated", model=scale.spec.name, y=y, x=x, horizon=horizon, value=estimate.value, stderr=estimate.stderr)
    return estimate


def survival_by_direct_simulation(
    scale: ScaleTable, x: float, horizon: float, dt: float, seed: int, n_paths: int, first_index: int = 0, **engine_options
) -> MonteCarloEstimate:
    """Fraction of plain paths not killed by the horizon; leaving through an escape band counts as alive."""
    engine_options.setdefault("record_every", None)
    indices = range(first_index, first_index + n_paths)
    paths = simulate_batch(scale.spec, None, x, StopRule(horizon=horizon), dt, seed, indices, scale=scale, **engine_options)
    return MonteCarloEstimate.from_samples(np.array([not p.killed for p in paths], dtype=float))
