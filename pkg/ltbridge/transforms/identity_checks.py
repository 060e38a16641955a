import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import structlog

from ltbridge.common.errors import DomainError
from ltbridge.diffusion.build_scale import ScaleTable, build_scale
from ltbridge.diffusion.classify_boundary import boundary_kinds
from ltbridge.diffusion.diffusion_spec import bessel3, killed_bm
from ltbridge.diffusion.potential import Side, check_side
from ltbridge.simulation.euler_engine import Domain, StopRule, simulate_batch
from ltbridge.transforms.drifts import TransformedSpec, recurrent_drift
from ltbridge.transforms.entrance_launcher import EntranceLauncher, launch_entrance_batch
from ltbridge.transforms.survival_estimator import MonteCarloEstimate

logger = structlog.get_logger()


@dataclass(frozen=True)
class SemigroupCheck:
    """Two estimates of the Bessel-type semigroup Q_t f(x)."""

    bessel: MonteCarloEstimate
    weighted: MonteCarloEstimate

    @property
    def difference(self) -> float:
        return self.bessel.value - self.weighted.value

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.bessel.stderr, self.weighted.stderr)


def semigroup_identity_check(
    scale: ScaleTable,
    y: float,
    side: Side,
    x: float,
    t: float,
    f: Callable[[np.ndarray], np.ndarray],
    n_paths: int,
    dt: float,
    seed: int,
    bridge_correction: bool = True,
) -> SemigroupCheck:
    """Q_t f(x) from Bessel-type paths against the killed diffusion weighted by (s(y) - s(X_t))/(s(y) - s(x)).

    Both batches share the seed but use disjoint stream indices.
    """
    check_side(scale, y, side, x)
    spec = scale.spec
    log = logger.bind(model=spec.name, y=y, side=side, x=x, t=t)
    stop = StopRule(horizon=t, boundary_exit=False)
    options = dict(record_every=None, observe=(t,), bridge_correction=bridge_correction, scale=scale)

    spec_t = TransformedSpec(scale, f"bessel_{side}", y)
    bessel_paths = simulate_batch(spec, spec_t.batch_drift(), x, stop, dt, seed, range(n_paths), domain=spec_t.engine_domain(), **options)
    x_b = np.array([p.observations[t] for p in bessel_paths])
    alive = np.isfinite(x_b)
    bessel_values = np.where(alive, f(np.where(alive, x_b, x)), 0.0)

    kinds = boundary_kinds(spec, scale)
    if side == "low":
        domain = Domain(spec.left, y, kill_lo=math.isfinite(spec.left) and kinds[0] in ("regular", "exit"), kill_hi=True)
    else:
        domain = Domain(y, spec.right, kill_lo=True, kill_hi=math.isfinite(spec.right) and kinds[1] in ("regular", "exit"))
    direct_paths = simulate_batch(spec, None, x, stop, dt, seed, range(n_paths, 2 * n_paths), domain=domain, **options)
    x_d = np.array([p.observations[t] for p in direct_paths])
    alive_d = np.isfinite(x_d)
    x_safe = np.where(alive_d, x_d, x)
    weight = (scale.value(y) - scale.s(x_safe)) / (scale.value(y) - scale.value(x))
    weighted_values = np.where(alive_d, f(x_safe) * weight, 0.0)

    check = SemigroupCheck(MonteCarloEstimate.from_samples(bessel_values), MonteCarloEstimate.from_samples(weighted_values))
    log.info("semigroup check", bessel=check.bessel.value, weighted=check.weighted.value, combined_stderr=check.combined_stderr)
    return check


def killed_bm_recurrent_check(b: float, probes: Sequence[float]) -> float:
    """Max abs gap between three expressions of the drift 1{U<b}/U of U = b - Y.

    Y is the recurrent transform of killed BM at 0; the same drift is the recurrent
    transform of the three-dimensional Bessel process at b. The mirror x -> b - x
    swaps left and right derivatives, so the kink U = b is not a valid probe.
    """
    kbm = build_scale(killed_bm(b))
    bes = build_scale(bessel3())
    worst = 0.0
    for u in probes:
        if not u > 0:
            raise DomainError(f"Invalid probe {u}; U lives on (0, inf)")
        if u == b:
            raise DomainError(f"probe {u} sits on the kink U = b")
        expected = 1.0 / u if u < b else 0.0
        mirrored = -recurrent_drift(kbm, 0.0, b - u)
        bessel_side = recurrent_drift(bes, b, u)
        worst = max(worst, abs(mirrored - expected), abs(bessel_side - expected))
    return worst


def last_passage_sample(
    scale: ScaleTable,
    y: float,
    side: Side,
    z: float,
    horizon: float,
    dt: float,
    seed: int,
    indices: Sequence[int],
    launcher: EntranceLauncher = EntranceLauncher(),
    bridge_correction: bool = True,
) -> tuple[np.ndarray, int]:
    """Last crossing times G_z of the Bessel-type motion launched from y, with the count of censored paths."""
    check_side(scale, y, side, z)
    spec_t = TransformedSpec(scale, f"bessel_{side}", y)
    paths = launch_entrance_batch(
        spec_t, launcher, StopRule(horizon=horizon), dt, seed, indices, watch=(z,), record_every=None, bridge_correction=bridge_correction
    )
    censored = sum(p.stop_reason == "horizon" for p in paths)
    if censored:
        logger.warning("last passages censored at the horizon", censored=censored, horizon=horizon)
    return np.array([p.crossings[z][1] for p in paths]), censored


def conditioned_exit_sample(
    scale: ScaleTable,
    y: float,
    side: Side,
    z: float,
    horizon: float,
    dt: float,
    seed: int,
    indices: Sequence[int],
    bridge_correction: bool = True,
) -> tuple[np.ndarray, int]:
    """Hitting times S_y of the diffusion from z conditioned to converge to y, censored at the horizon as min(S_y, horizon)."""
    check_side(scale, y, side, z)
    spec_t = TransformedSpec(scale, f"cond_exit_{side}", y)
    paths = simulate_batch(
        scale.spec,
        spec_t.batch_drift(),
        z,
        StopRule(horizon=horizon, boundary_exit=False),
        dt,
        seed,
        indices,
        domain=spec_t.engine_domain(),
        scale=scale,
        record_every=None,
        bridge_correction=bridge_correction,
    )
    censored = sum(not p.killed for p in paths)
    return np.array([min(p.lifetime, horizon) for p in paths]), censored
