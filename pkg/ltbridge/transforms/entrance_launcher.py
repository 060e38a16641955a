import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import structlog

from ltbridge.common.config import ENTRANCE_SCALE_DEPTH, EXIT_ETA
from ltbridge.common.errors import ConfigError, InversionError
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.simulation.euler_engine import EulerBatch, Path, StopRule
from ltbridge.simulation.random_source import LAUNCH, NormalStreams, RandomSource
from ltbridge.transforms.drifts import TransformedSpec

logger = structlog.get_logger()

LaunchMode = Literal["offset", "exact"]


@dataclass(frozen=True)
class EntranceLauncher:
    """How a Bessel-type motion leaves its entrance boundary y.

    offset: Euler from y -/+ offset with the Bessel-type drift.
    exact: a three-dimensional Bessel path R from 0, mapped to the state space by
    x = s^-1(s(y) +/- R); each time step dt advances the Bessel clock by
    du = dt * (sigma s')^2(X).
    """

    mode: LaunchMode = "exact"
    offset: float | None = None

    def __post_init__(self):
        if self.mode not in ("offset", "exact"):
            raise ConfigError(f"Invalid launcher mode {self.mode!r}")
        if self.offset is not None and not self.offset > 0:
            raise ConfigError(f"Invalid launch offset {self.offset}")


def default_offset(scale: ScaleTable, y: float, side: str, dt: float) -> float:
    """Offset deep in the entrance regime: |side scale| >= ENTRANCE_SCALE_DEPTH, floored at 2 sigma(y) sqrt(dt)."""
    spec = scale.spec
    sig = float(spec.sigma(np.asarray(y)))
    delta = max(1.0 / (ENTRANCE_SCALE_DEPTH * scale.derivative(y)), 2.0 * sig * math.sqrt(dt))
    far = spec.right if side == "high" else spec.left
    while abs(far - y) <= delta:
        delta *= 0.5
    return delta


class ExactEntrance:
    """Step hook running launched paths through the time/scale-changed Bessel-3 construction.

    Each engine step advances a launched path's clock by exactly dt: the Bessel-3
    increment uses du = dt * sigma^2(X) s'(X)^2 at the left point, so no
    resampling onto the uniform grid is needed.
    """

    def __init__(self, scale: ScaleTable, y: float, dt: float, seed: int, indices: Sequence[int], eta: float = EXIT_ETA):
        n = len(indices)
        self.scale = scale
        self.spec = scale.spec
        self.s_y = scale.value(y)
        self.dt = dt
        self.eta = eta
        self.w = np.zeros((n, 3))
        self.sign = np.zeros(n)
        self.launched = np.zeros(n, dtype=bool)
        self.noise = NormalStreams(seed, indices, LAUNCH, width=3)

    def start(self, idx: np.ndarray, signs: np.ndarray) -> None:
        self.launched[idx] = True
        self.sign[idx] = signs
        self.w[idx] = 0.0

    def _state(self, v: np.ndarray) -> np.ndarray:
        s_l, s_r = self.scale.s_l, self.scale.s_r
        out = np.empty_like(v)
        hi = v >= s_r
        lo = v <= s_l
        inner = ~(hi | lo)
        out[inner] = self.scale.inverse(v[inner])
        # a finite end is reached; an infinite end with finite scale stops through the exit band
        out[hi] = self.spec.right if math.isfinite(self.spec.right) else self.scale.inverse(s_r - 0.5 * self.eta)
        out[lo] = self.spec.left if math.isfinite(self.spec.left) else self.scale.inverse(s_l + 0.5 * self.eta)
        bad = ~np.isfinite(out)
        if bad.any():
            raise InversionError("side scale could not be inverted", bracket=(s_l, s_r), target=float(v[bad][0]))
        return out

    def __call__(self, act: np.ndarray, xa: np.ndarray, x_new: np.ndarray) -> np.ndarray:
        g = self.noise.next()
        mask = self.launched[act]
        if not mask.any():
            return x_new
        rows = act[mask]
        x_here = xa[mask]
        with np.errstate(all="ignore"):
            sig = np.asarray(self.spec.sigma(x_here), dtype=float) * np.ones_like(x_here)
            ds = np.asarray(self.scale.ds(x_here), dtype=float) * np.ones_like(x_here)
        du = self.dt * (sig * ds) ** 2
        w = self.w[rows] + np.sqrt(du)[:, None] * g[rows]
        self.w[rows] = w
        v = self.s_y + self.sign[rows] * np.linalg.norm(w, axis=1)
        x_new = x_new.copy()
        x_new[mask] = self._state(v)
        return x_new


def launch_entrance_batch(
    spec_t: TransformedSpec,
    launcher: EntranceLauncher,
    stop: StopRule,
    dt: float,
    seed: int,
    indices: Sequence[int],
    **engine_options,
) -> list[Path]:
    """Bessel-type motions started at their entrance boundary y."""
    if spec_t.kind not in ("bessel_low", "bessel_high"):
        raise ConfigError(f"entrance launch needs a Bessel-type transform, got {spec_t.kind}")
    y, side, scale = spec_t.y, spec_t.side, spec_t.scale
    sign = 1.0 if side == "high" else -1.0
    log = logger.bind(model=scale.spec.name, mode=launcher.mode, side=side, y=y)
    engine_options.setdefault("scale", scale)
    if launcher.mode == "offset":
        offset = launcher.offset or default_offset(scale, y, side, dt)
        log.debug("offset launch", offset=offset)
        engine = EulerBatch(
            scale.spec, spec_t.batch_drift(), y + sign * offset, dt, seed, indices, domain=spec_t.engine_domain(), **engine_options
        )
    else:
        start = math.nextafter(y, math.inf if side == "high" else -math.inf)
        engine = EulerBatch(scale.spec, spec_t.batch_drift(), start, dt, seed, indices, domain=spec_t.engine_domain(), **engine_options)
        engine.place(np.arange(engine.n), y)
        hook = ExactEntrance(scale, y, dt, seed, indices)
        hook.start(np.arange(engine.n), np.full(engine.n, sign))
        engine.after_step = hook
    engine.set_stop(stop)
    engine.run(stop.horizon)
    return engine.paths()


def launch_entrance(spec_t: TransformedSpec, launcher: EntranceLauncher, stop: StopRule, dt: float, rng: RandomSource, **engine_options) -> Path:
    return launch_entrance_batch(spec_t, launcher, stop, dt, rng.seed, [rng.index], **engine_options)[0]
