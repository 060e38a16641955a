import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
import structlog

from ltbridge.common.config import ESCAPE_LEVEL, EXIT_ETA, SNAP_TOL
from ltbridge.common.errors import ConfigError, DomainError, NumericError
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.classify_boundary import boundary_kinds
from ltbridge.diffusion.diffusion_spec import DiffusionSpec
from ltbridge.simulation.local_time import BatchLocalTime, default_bandwidth
from ltbridge.simulation.random_source import BRIDGE_CORRECTION, NOISE, NormalStreams, RandomSource, UniformStreams

logger = structlog.get_logger()

BatchDrift = Callable[[np.ndarray, np.ndarray], np.ndarray]
ExitSide = Literal["left", "right", "none"]

RUNNING, HORIZON, KILLED_LEFT, KILLED_RIGHT, HIT_LEVEL, LT_REACHED, EXIT_LEFT, EXIT_RIGHT = range(8)
STOP_NAMES = {
    RUNNING: "running",
    HORIZON: "horizon",
    KILLED_LEFT: "killed_left",
    KILLED_RIGHT: "killed_right",
    HIT_LEVEL: "hit_level",
    LT_REACHED: "local_time_reached",
    EXIT_LEFT: "exit_left",
    EXIT_RIGHT: "exit_right",
}


def step(x, drift_val, sigma_val, dt: float, z):
    """One Euler-Maruyama step: x + b dt + sigma sqrt(dt) z."""
    if dt <= 0:
        raise DomainError(f"Invalid step size {dt}")
    if np.any(np.asarray(sigma_val) < 0):
        raise DomainError("sigma must be nonnegative")
    for name, value in (("x", x), ("drift", drift_val), ("sigma", sigma_val), ("z", z)):
        if not np.all(np.isfinite(value)):
            raise NumericError(f"non-finite {name} in Euler step", location=float(np.ravel(x)[0]) if np.ndim(x) else x)
    return x + drift_val * dt + sigma_val * math.sqrt(dt) * z


@dataclass(frozen=True)
class StopRule:
    """Stop conditions; the first one triggered ends a path. A finite horizon is always required."""

    horizon: float
    hit_level: float | None = None
    hit_tol: float = 0.0
    lt_level: float | None = None
    lt_target: float | np.ndarray | None = None
    boundary_exit: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon >= 0):
            raise ConfigError(f"Invalid horizon {self.horizon}; a finite horizon is required")
        if (self.lt_level is None) != (self.lt_target is None):
            raise ConfigError("lt_level and lt_target go together")
        if self.lt_target is not None and np.any(np.asarray(self.lt_target) < 0):
            raise ConfigError("local-time targets must be nonnegative")


@dataclass
class Path:
    times: np.ndarray
    values: np.ndarray
    killed: bool
    lifetime: float
    seed: int
    index: int = 0
    stop_reason: str = "horizon"
    local_time: dict[float, float] = field(default_factory=dict)
    lt_reached_at: float = math.inf
    crossings: dict[float, tuple[float, float]] = field(default_factory=dict)
    observations: dict[float, float] = field(default_factory=dict)
    lt_observations: dict[float, dict[float, float]] = field(default_factory=dict)
    reflections: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def terminal_time(self) -> float:
        return float(self.times[-1])

    @property
    def terminal_value(self) -> float:
        return float(self.values[-1])

    def value_at(self, t: float) -> float:
        """Linear interpolation of the recorded values; nan past the end of the path."""
        if t > self.times[-1] + 1e-12:
            return math.nan
        return float(np.interp(t, self.times, self.values))


@dataclass(frozen=True)
class Domain:
    """Per-path interval with a kill/reflect policy at each finite end."""

    lo: float
    hi: float
    kill_lo: bool
    kill_hi: bool


def default_domain(spec: DiffusionSpec, scale: ScaleTable | None = None) -> Domain:
    """Kill at finite regular/exit ends, reflect at finite entrance/natural ends."""
    if spec.boundary_kinds is not None or scale is not None:
        kinds = boundary_kinds(spec, scale)
    else:
        kinds = ("regular", "regular")
    return Domain(
        lo=spec.left,
        hi=spec.right,
        kill_lo=math.isfinite(spec.left) and kinds[0] in ("regular", "exit"),
        kill_hi=math.isfinite(spec.right) and kinds[1] in ("regular", "exit"),
    )


class EulerBatch:
    """Vectorised Euler-Maruyama over a batch of paths with per-path streams.

    Path i uses stream ``RandomSource(seed, indices[i])``; all streams advance
    in lockstep so a path is reproducible whatever batch it is simulated in.
    Hooks let callers change a path's dynamics mid-run (the bridge samplers do).
    """

    def __init__(
        self,
        spec: DiffusionSpec,
        drift_fn: BatchDrift,
        x0: float | np.ndarray,
        dt: float,
        seed: int,
        indices: Sequence[int],
        *,
        domain: Domain | None = None,
        scale: ScaleTable | None = None,
        drift_cap: float | None = None,
        lt_levels: Sequence[float] = (),
        bandwidths: Sequence[float] | None = None,
        watch: Sequence[float] = (),
        watch_tol: float = 0.0,
        record_every: int | None = 1,
        observe: Sequence[float] = (),
        bridge_correction: bool = False,
        escape_level: float = ESCAPE_LEVEL,
        exit_eta: float = EXIT_ETA,
    ):
        if dt <= 0:
            raise ConfigError(f"Invalid dt {dt}")
        self.spec = spec
        self.scale = scale
        self.drift_fn = drift_fn
        self.dt = dt
        self.sqrt_dt = math.sqrt(dt)
        self.seed = seed
        self.indices = np.asarray(indices, dtype=np.int64)
        n = len(self.indices)
        if n == 0:
            raise ConfigError("empty batch")
        self.n = n
        self.x = np.broadcast_to(np.asarray(x0, dtype=float), (n,)).copy()
        domain = domain or default_domain(spec, scale)
        self.lo = np.full(n, domain.lo)
        self.hi = np.full(n, domain.hi)
        self.kill_lo = np.full(n, domain.kill_lo)
        self.kill_hi = np.full(n, domain.kill_hi)
        outside = ~((self.x > self.lo) & (self.x < self.hi))
        if outside.any():
            raise DomainError(f"starting point {self.x[outside][0]} outside the state space")
        self.drift_cap = (1.0 / self.sqrt_dt) if drift_cap is None else drift_cap
        self.k = 0
        self.status = np.full(n, RUNNING, dtype=np.int8)
        self.stop_step = np.full(n, -1, dtype=np.int64)
        self.lifetime = np.full(n, math.inf)
        self.reflections = np.zeros(n, dtype=np.int64)
        self.exit_enabled = np.ones(n, dtype=bool)
        self.noise = NormalStreams(seed, self.indices, NOISE)
        self.bridge_correction = bridge_correction
        self.uniforms = UniformStreams(seed, self.indices, BRIDGE_CORRECTION) if bridge_correction else None
        self.escape_level = escape_level
        self.exit_eta = exit_eta

        if bandwidths is None:
            bandwidths = [default_bandwidth(float(spec.sigma(np.asarray(level))), dt) for level in lt_levels]
        self.trackers = [BatchLocalTime(level, eps, n) for level, eps in zip(lt_levels, bandwidths)]
        self.lt_target: np.ndarray | None = None
        self.lt_target_level: int | None = None
        self.lt_reached_at = np.full(n, math.inf)
        self.on_target: Callable[[np.ndarray, np.ndarray], None] | None = None
        self.after_step: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray] | None = None
        self.hit_level: float | None = None
        self.hit_tol = 0.0

        self.watch = list(watch)
        self.watch_tol = watch_tol
        self.first_cross = np.full((len(self.watch), n), math.inf)
        self.last_cross = np.full((len(self.watch), n), -math.inf)
        for j, z in enumerate(self.watch):
            at = np.abs(self.x - z) <= watch_tol
            self.first_cross[j, at] = 0.0
            self.last_cross[j, at] = 0.0

        self.record_every = record_every
        self.records: list[tuple[int, np.ndarray]] = [(0, self.x.copy())]
        self.observe_steps = {int(round(t / dt)): t for t in observe}
        self.observations: dict[float, np.ndarray] = {}
        self.lt_observations: dict[float, list[np.ndarray]] = {}
        self._observe()

    # configuration shared by simulate_batch and the bridge samplers
    def set_stop(self, stop: StopRule) -> None:
        if stop.hit_level is not None:
            self.hit_level = stop.hit_level
            self.hit_tol = stop.hit_tol
            at = np.abs(self.x - stop.hit_level) <= stop.hit_tol
            self._stop(np.flatnonzero(at & (self.status == RUNNING)), HIT_LEVEL)
        if stop.lt_level is not None:
            levels = [tr.level for tr in self.trackers]
            if stop.lt_level not in levels:
                raise ConfigError(f"local-time level {stop.lt_level} is not tracked")
            self.lt_target_level = levels.index(stop.lt_level)
            self.lt_target = np.broadcast_to(np.asarray(stop.lt_target, dtype=float), (self.n,)).copy()
            zero = np.flatnonzero((self.lt_target <= 0.0) & (self.status == RUNNING))
            self.lt_reached_at[zero] = 0.0
            self._target_reached(zero, np.zeros(len(zero)))
        if not stop.boundary_exit:
            self.exit_enabled[:] = False

    def place(self, idx: np.ndarray, value: float | np.ndarray) -> None:
        """Move paths to ``value`` (e.g. onto an entrance boundary) without a step."""
        self.x[idx] = value
        if self.k == 0:
            if self.records:
                self.records[0] = (0, self.x.copy())
            self.observations.pop(self.observe_steps.get(0), None)
            self._observe()

    @property
    def active(self) -> np.ndarray:
        return self.status == RUNNING

    def _stop(self, idx: np.ndarray, reason: int) -> None:
        if len(idx) == 0:
            return
        self.status[idx] = reason
        self.stop_step[idx] = self.k

    def _target_reached(self, idx: np.ndarray, tau: np.ndarray) -> None:
        if len(idx) == 0:
            return
        if self.on_target is not None:
            self.on_target(idx, tau)
        else:
            self._stop(idx, LT_REACHED)

    def _observe(self) -> None:
        t = self.observe_steps.get(self.k)
        if t is None:
            return
        obs = self.x.copy()
        obs[self.status != RUNNING] = math.nan
        self.observations[t] = obs
        self.lt_observations[t] = [tr.value.copy() for tr in self.trackers]

    def _drift(self, xa: np.ndarray, act: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            b = np.asarray(self.drift_fn(xa, act), dtype=float) * np.ones_like(xa)
        bad = ~np.isfinite(b)
        if bad.any():
            raise NumericError("non-finite drift", location=float(xa[bad][0]))
        return np.clip(b, -self.drift_cap, self.drift_cap)

    def advance(self) -> None:
        """One step for every running path."""
        z = self.noise.next()
        u = self.uniforms.next() if self.uniforms is not None else None
        act = np.flatnonzero(self.status == RUNNING)
        if len(act) == 0:
            self.k += 1
            return
        xa = self.x[act]
        b = self._drift(xa, act)
        with np.errstate(all="ignore"):
            sig = np.asarray(self.spec.sigma(xa), dtype=float) * np.ones_like(xa)
        if not np.all(np.isfinite(sig)):
            raise NumericError("non-finite sigma", location=float(xa[~np.isfinite(sig)][0]))
        x_new = xa + b * self.dt + sig * self.sqrt_dt * z[act]
        if self.after_step is not None:
            x_new = self.after_step(act, xa, x_new)
        t_new = (self.k + 1) * self.dt
        self.k += 1

        lt_events = None
        for j, tracker in enumerate(self.trackers):
            before, after = tracker.update(act, xa, sig, self.dt)
            if j == self.lt_target_level:
                target = self.lt_target[act]
                hit = (before < target) & (after >= target)
                if hit.any():
                    frac = (target[hit] - before[hit]) / (after[hit] - before[hit])
                    lt_events = (act[hit], t_new - self.dt + frac * self.dt)

        x_new = self._boundaries(act, xa, x_new, sig, u, t_new)
        self.x[act] = x_new

        for j, level in enumerate(self.watch):
            alive = self.status[act] == RUNNING
            crossed = alive & (((xa - level) * (x_new - level) <= 0) | (np.abs(x_new - level) <= self.watch_tol))
            rows = act[crossed]
            first = self.first_cross[j]
            first[rows] = np.minimum(first[rows], t_new)
            self.last_cross[j, rows] = t_new

        if lt_events is not None:
            idx, tau = lt_events
            keep = self.status[idx] == RUNNING
            self.lt_reached_at[idx[keep]] = tau[keep]
            self._target_reached(idx[keep], tau[keep])
        if self.hit_level is not None:
            still = self.status[act] == RUNNING
            running = act[still]
            xr_prev, xr = xa[still], self.x[running]
            hit = ((xr_prev - self.hit_level) * (xr - self.hit_level) <= 0) | (np.abs(xr - self.hit_level) <= self.hit_tol)
            self._stop(running[hit], HIT_LEVEL)
        self._check_exit(act)
        if self.record_every and self.k % self.record_every == 0:
            self.records.append((self.k, self.x.copy()))
        self._observe()

    def _boundaries(self, act, xa, x_new, sig, u, t_new) -> np.ndarray:
        lo, hi = self.lo[act], self.hi[act]
        kill_lo, kill_hi = self.kill_lo[act], self.kill_hi[act]
        below, above = x_new <= lo, x_new >= hi
        if self.bridge_correction and u is not None:
            var = sig * sig * self.dt
            with np.errstate(all="ignore"):
                p_lo = np.where(kill_lo & ~below & np.isfinite(lo), np.exp(-2.0 * (xa - lo) * (x_new - lo) / var), 0.0)
                p_hi = np.where(kill_hi & ~above & np.isfinite(hi), np.exp(-2.0 * (hi - xa) * (hi - x_new) / var), 0.0)
            ua = u[act]
            below = below | (ua < p_lo)
            above = above | (~below & (ua < p_lo + p_hi) & (ua >= p_lo))
        die_lo = below & kill_lo
        die_hi = above & kill_hi & ~die_lo
        reflect_lo = below & ~kill_lo
        reflect_hi = above & ~kill_hi
        if reflect_lo.any() or reflect_hi.any():
            x_new = np.where(reflect_lo, 2.0 * lo - x_new, x_new)
            x_new = np.where(reflect_hi, 2.0 * hi - x_new, x_new)
            inside_lo = np.nextafter(lo, np.inf)
            inside_hi = np.nextafter(hi, -np.inf)
            x_new = np.clip(x_new, inside_lo, inside_hi)
            self.reflections[act[reflect_lo | reflect_hi]] += 1
        x_new = np.where(die_lo, lo, np.where(die_hi, hi, x_new))
        for mask, reason in ((die_lo, KILLED_LEFT), (die_hi, KILLED_RIGHT)):
            rows = act[mask]
            self.lifetime[rows] = t_new
            self.status[rows] = reason
            self.stop_step[rows] = self.k
        return x_new

    def _check_exit(self, act: np.ndarray) -> None:
        running = act[(self.status[act] == RUNNING) & self.exit_enabled[act]]
        if len(running) == 0:
            return
        xr = self.x[running]
        for end, is_left in ((self.spec.left, True), (self.spec.right, False)):
            if math.isfinite(end):
                continue
            s_end = None
            if self.scale is not None:
                s_end = self.scale.s_l if is_left else self.scale.s_r
            if s_end is not None and math.isfinite(s_end):
                sx = self.scale.s(xr)
                out = (sx <= s_end + self.exit_eta) if is_left else (sx >= s_end - self.exit_eta)
            else:
                out = (xr < -self.escape_level) if is_left else (xr > self.escape_level)
            self._stop(running[out], EXIT_LEFT if is_left else EXIT_RIGHT)

    def run(self, horizon: float) -> "EulerBatch":
        n_steps = int(math.ceil(horizon / self.dt - 1e-9))
        while self.k < n_steps and (self.status == RUNNING).any():
            self.advance()
        for k, t in self.observe_steps.items():
            if k <= n_steps and t not in self.observations:
                self.observations[t] = np.full(self.n, math.nan)
                self.lt_observations[t] = [tr.value.copy() for tr in self.trackers]
        return self

    def local_times(self) -> dict[float, np.ndarray]:
        return {tr.level: tr.value.copy() for tr in self.trackers}

    def paths(self) -> list[Path]:
        """Materialize per-path records."""
        steps = np.array([k for k, _ in self.records], dtype=np.int64)
        table = np.array([v for _, v in self.records]) if self.records else np.empty((0, self.n))
        out = []
        for i in range(self.n):
            end = self.stop_step[i] if self.stop_step[i] >= 0 else self.k
            status = self.status[i] if self.status[i] != RUNNING else HORIZON
            keep = steps <= end
            ks = steps[keep]
            vals = table[keep, i]
            if len(ks) == 0 or ks[-1] != end:
                ks = np.append(ks, end)
                vals = np.append(vals, self.x[i])
            out.append(
                Path(
                    times=ks * self.dt,
                    values=vals,
                    killed=status in (KILLED_LEFT, KILLED_RIGHT),
                    lifetime=float(self.lifetime[i]),
                    seed=self.seed,
                    index=int(self.indices[i]),
                    stop_reason=STOP_NAMES[status],
                    local_time={tr.level: float(tr.value[i]) for tr in self.trackers},
                    lt_reached_at=float(self.lt_reached_at[i]),
                    crossings={
                        z: (float(self.first_cross[j, i]), float(self.last_cross[j, i])) for j, z in enumerate(self.watch)
                    },
                    observations={t: float(v[i]) for t, v in self.observations.items()},
                    lt_observations={
                        t: {tr.level: float(vals_[i]) for tr, vals_ in zip(self.trackers, arrs)}
                        for t, arrs in self.lt_observations.items()
                    },
                    reflections=int(self.reflections[i]),
                )
            )
        return out


def spec_drift(spec: DiffusionSpec) -> BatchDrift:
    return lambda x, idx: spec.drift(x)


def simulate_batch(
    spec: DiffusionSpec,
    drift_fn: BatchDrift | None,
    x0: float | np.ndarray,
    stop: StopRule,
    dt: float,
    seed: int,
    indices: Sequence[int],
    **engine_options,
) -> list[Path]:
    """Simulate the paths with stream indices ``indices``; see EulerBatch for the options."""
    log = logger.bind(model=spec.name, n_paths=len(indices), dt=dt)
    engine = EulerBatch(spec, drift_fn or spec_drift(spec), x0, dt, seed, indices, **engine_options)
    engine.set_stop(stop)
    engine.run(stop.horizon)
    paths = engine.paths()
    killed = sum(p.killed for p in paths)
    log.debug("batch finished", killed_fraction=killed / len(paths))
    return paths


def simulate(
    spec: DiffusionSpec,
    drift_fn: Callable[[np.ndarray], np.ndarray] | None,
    x0: float,
    stop: StopRule,
    dt: float,
    rng: RandomSource,
    **engine_options,
) -> Path:
    """Single-path view of simulate_batch: stream ``rng.index`` under master seed ``rng.seed``."""
    batch_drift = None if drift_fn is None else (lambda x, idx: drift_fn(x))
    return simulate_batch(spec, batch_drift, x0, stop, dt, rng.seed, [rng.index], **engine_options)[0]


def exit_side(spec: DiffusionSpec, scale: ScaleTable | None, path: Path, eta: float = EXIT_ETA) -> ExitSide:
    """Side of the state space the path is leaving through, if its stop decided it."""
    match path.stop_reason:
        case "killed_left" | "exit_left":
            return "left"
        case "killed_right" | "exit_right":
            return "right"
    if scale is not None and spec.contains(path.terminal_value):
        sx = scale.value(path.terminal_value)
        if math.isfinite(scale.s_l) and sx <= scale.s_l + eta:
            return "left"
        if math.isfinite(scale.s_r) and sx >= scale.s_r - eta:
            return "right"
    if abs(path.terminal_value - spec.left) <= SNAP_TOL:
        return "left"
    if abs(path.terminal_value - spec.right) <= SNAP_TOL:
        return "right"
    return "none"
