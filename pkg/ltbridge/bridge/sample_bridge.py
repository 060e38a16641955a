import math
from typing import Callable, Sequence

import numpy as np
import structlog

from ltbridge.bridge.bridge_batch import BridgeBatch
from ltbridge.bridge.bridge_config import BridgeConfig, BridgeOutcome
from ltbridge.bridge.mixing_laws import ExponentialLaw, MixingLaw
from ltbridge.common.config import HORIZON_RETRIES, WORKERS
from ltbridge.common.errors import ConfigError, IncompleteBridgeError
from ltbridge.diffusion.build_scale import ScaleTable
from ltbridge.diffusion.diffusion_spec import DiffusionSpec
from ltbridge.diffusion.potential import rho, terminal_lt_rate
from ltbridge.simulation.euler_engine import EulerBatch, Path, StopRule, exit_side
from ltbridge.simulation.local_time import default_bandwidth
from ltbridge.simulation.random_source import RandomSource, aux_uniforms
from ltbridge.simulation.worker_pool import map_paths
from ltbridge.transforms.drifts import TransformedSpec
from ltbridge.transforms.entrance_launcher import ExactEntrance, default_offset

logger = structlog.get_logger()


class BridgeRun:
    """Both phases of a batch of bridges on one Euler batch.

    Phase 1 runs the recurrent transform from y until the local time at y
    reaches the path's level; at that step the path is put back on y and
    continues as the Bessel-type motion on its theta side.
    """

    def __init__(
        self,
        scale: ScaleTable,
        cfg: BridgeConfig,
        levels: np.ndarray,
        thetas: np.ndarray,
        seed: int,
        indices: Sequence[int],
        horizon: float,
    ):
        spec = scale.spec
        y = cfg.y
        spec.check_inside(y, "y")
        self.scale = scale
        self.cfg = cfg
        self.y = y
        self.levels = np.asarray(levels, dtype=float)
        self.thetas = np.asarray(thetas, dtype=np.int8)
        self.horizon = horizon
        self.recurrent = TransformedSpec(scale, "recurrent", y)
        self.sides = {side: TransformedSpec(scale, f"bessel_{side}", y) for side in ("low", "high")}
        self.launcher = cfg.entrance_launcher()

        self.engine = EulerBatch(
            spec,
            self._drift,
            y,
            cfg.dt,
            seed,
            indices,
            domain=self.recurrent.engine_domain(),
            scale=scale,
            lt_levels=(y,),
            bandwidths=None if cfg.eps is None else (cfg.eps,),
            record_every=cfg.record_every,
            observe=cfg.observe,
            bridge_correction=cfg.bridge_correction,
        )
        n = self.engine.n
        self.switched = np.zeros(n, dtype=bool)
        self.lt_at_switch = np.full(n, math.nan)
        self.reentries = np.zeros(n, dtype=np.int64)
        self.hook = None
        self.offsets = {}
        if self.launcher.mode == "exact":
            self.hook = ExactEntrance(scale, y, cfg.dt, seed, indices)
        else:
            for side, needed in (("low", (self.thetas == 0).any()), ("high", (self.thetas == 1).any())):
                if needed:
                    self.offsets[side] = self.launcher.offset or default_offset(scale, y, side, cfg.dt)
        self.engine.after_step = self._after_step
        self.engine.on_target = self._switch
        self.engine.set_stop(StopRule(horizon=horizon, lt_level=y, lt_target=self.levels, boundary_exit=False))

    def _drift(self, x: np.ndarray, idx: np.ndarray) -> np.ndarray:
        out = self.recurrent.drift(x)
        switched = self.switched[idx]
        if switched.any():
            theta = self.thetas[idx]
            for side, mask in (("high", switched & (theta == 1)), ("low", switched & (theta == 0))):
                if mask.any():
                    out[mask] = self.sides[side].drift(x[mask])
        return out

    def _after_step(self, act: np.ndarray, xa: np.ndarray, x_new: np.ndarray) -> np.ndarray:
        """Launch hook, then count switched paths whose new state is not strictly on their theta side of y.

        The count is taken before the engine reflects at y, so a wrong launch side or a
        drift pulling back through y shows up in either launcher mode.
        """
        if self.hook is not None:
            x_new = self.hook(act, xa, x_new)
        switched = self.switched[act]
        if switched.any():
            sign = np.where(self.thetas[act] == 1, 1.0, -1.0)
            wrong = switched & (sign * (x_new - self.y) <= 0.0)
            self.reentries[act[wrong]] += 1
        return x_new

    def _switch(self, idx: np.ndarray, tau: np.ndarray) -> None:
        engine = self.engine
        self.switched[idx] = True
        self.lt_at_switch[idx] = engine.trackers[0].value[idx]
        theta = self.thetas[idx]
        for side, sign, rows in (("high", 1.0, idx[theta == 1]), ("low", -1.0, idx[theta == 0])):
            if len(rows) == 0:
                continue
            domain = self.sides[side].engine_domain()
            engine.lo[rows], engine.hi[rows] = domain.lo, domain.hi
            engine.kill_lo[rows], engine.kill_hi[rows] = domain.kill_lo, domain.kill_hi
            engine.exit_enabled[rows] = self.cfg.stop_at_exit
            if self.hook is not None:
                engine.place(rows, self.y)
                self.hook.start(rows, np.full(len(rows), sign))
            else:
                engine.place(rows, self.y + sign * self.offsets[side])

    def run(self) -> list[BridgeOutcome]:
        engine = self.engine.run(self.horizon)
        spec = self.scale.spec
        lt = engine.trackers[0].value
        outcomes = []
        for i, path in enumerate(engine.paths()):
            switched = bool(self.switched[i])
            path.meta.update(
                theta=int(self.thetas[i]),
                level=float(self.levels[i]),
                switch_time=float(engine.lt_reached_at[i]) if switched else None,
                phase="bessel" if switched else "recurrent",
                horizon=self.horizon,
            )
            outcomes.append(
                BridgeOutcome(
                    path=path,
                    theta=int(self.thetas[i]),
                    switch_time=float(engine.lt_reached_at[i]) if switched else math.inf,
                    lt_at_switch=float(self.lt_at_switch[i]),
                    lt_terminal=float(lt[i]),
                    exit_side=exit_side(spec, self.scale, path) if switched else "none",
                    target=float(self.levels[i]),
                    reentries=int(self.reentries[i]),
                )
            )
        return outcomes


def _check_scale(spec: DiffusionSpec, scale: ScaleTable) -> None:
    if scale.spec != spec:
        raise ConfigError(f"scale table was built for {scale.spec.name}, not {spec.name}")


def _bridge_job(scale: ScaleTable, cfg: BridgeConfig, law: MixingLaw, seed: int, horizon: float) -> Callable[[Sequence[int]], list]:
    """theta from the first auxiliary uniform, the level from the second; both drawn before any step."""
    rho_y = rho(scale, cfg.y)

    def job(indices: Sequence[int]) -> list[BridgeOutcome]:
        u = aux_uniforms(seed, indices, 2)
        thetas = (u[:, 0] < rho_y).astype(np.int8)
        levels = law.ppf(u[:, 1])
        return BridgeRun(scale, cfg, levels, thetas, seed, indices, horizon).run()

    return job


def _sample_batch(scale: ScaleTable, cfg: BridgeConfig, law: MixingLaw, seed: int, workers: int) -> BridgeBatch:
    horizon = cfg.resolved_horizon(scale)
    log = logger.bind(model=scale.spec.name, y=cfg.y, law=law.kind, n_paths=cfg.n_paths, horizon=horizon)
    outcomes = map_paths(_bridge_job(scale, cfg, law, seed, horizon), range(cfg.n_paths), workers)
    eps = cfg.eps or default_bandwidth(float(scale.spec.sigma(np.asarray(cfg.y))), cfg.dt)
    batch = BridgeBatch(outcomes=outcomes, y=cfg.y, eps=eps, horizon=horizon, sigma_y=float(scale.spec.sigma(np.asarray(cfg.y))))
    if batch.switched_fraction < 1.0:
        log.warning("some paths still in the recurrent phase at the horizon", switched_fraction=batch.switched_fraction)
    log.info("bridge batch finished", switched_fraction=batch.switched_fraction, theta_ones=batch.theta_count()[0])
    return batch


def _sample_one(scale: ScaleTable, cfg: BridgeConfig, law: MixingLaw, rng: RandomSource) -> BridgeOutcome:
    """Strict single path: extend the horizon until phase 1 completes or the retries run out.

    The horizon actually used is in ``outcome.path.meta["horizon"]``.
    """
    horizon = cfg.resolved_horizon(scale)
    log = logger.bind(model=scale.spec.name, y=cfg.y, seed=rng.seed, index=rng.index)
    for attempt in range(HORIZON_RETRIES + 1):
        outcome = _bridge_job(scale, cfg, law, rng.seed, horizon)([rng.index])[0]
        if outcome.switched:
            return outcome
        if attempt < HORIZON_RETRIES:
            log.warning("phase 1 incomplete, doubling the horizon", horizon=horizon, attempt=attempt)
            horizon *= 2.0
    raise IncompleteBridgeError(
        f"local time at y={cfg.y} stayed below {outcome.target} up to t={horizon}", n_incomplete=1
    )


def sample_bridge(spec: DiffusionSpec, scale: ScaleTable, cfg: BridgeConfig, rng: RandomSource) -> BridgeOutcome:
    """One local-time bridge pinned at L^y_inf = cfg.a, started at y."""
    _check_scale(spec, scale)
    if cfg.target != "fixed":
        raise ConfigError("sample_bridge needs a fixed level a")
    return _sample_one(scale, cfg, cfg.mixing_law(scale), rng)


def sample_bridge_batch(spec: DiffusionSpec, scale: ScaleTable, cfg: BridgeConfig, seed: int, workers: int = WORKERS) -> BridgeBatch:
    _check_scale(spec, scale)
    if cfg.target != "fixed":
        raise ConfigError("sample_bridge_batch needs a fixed level a")
    return _sample_batch(scale, cfg, cfg.mixing_law(scale), seed, workers)


def sample_randomized_bridge(spec: DiffusionSpec, scale: ScaleTable, cfg: BridgeConfig, rng: RandomSource) -> BridgeOutcome:
    """Bridge with level drawn from cfg.g, independently of theta and of the driving noise."""
    _check_scale(spec, scale)
    if cfg.target != "randomized":
        raise ConfigError("a randomized bridge takes a mixing law, not a fixed level")
    return _sample_one(scale, cfg, cfg.mixing_law(scale), rng)


def sample_randomized_bridge_batch(
    spec: DiffusionSpec, scale: ScaleTable, cfg: BridgeConfig, seed: int, workers: int = WORKERS
) -> BridgeBatch:
    _check_scale(spec, scale)
    if cfg.target != "randomized":
        raise ConfigError("a randomized bridge takes a mixing law, not a fixed level")
    return _sample_batch(scale, cfg, cfg.mixing_law(scale), seed, workers)


def _decomposition_config(scale: ScaleTable, y: float, horizon: float, dt: float, n_paths: int, options: dict) -> BridgeConfig:
    return BridgeConfig(y=y, g=ExponentialLaw(rate=terminal_lt_rate(scale, y)), horizon=horizon, dt=dt, n_paths=n_paths, **options)


def sample_decomposition(
    spec: DiffusionSpec, scale: ScaleTable, y: float, horizon: float, dt: float, rng: RandomSource, **options
) -> Path:
    """Recurrent transform up to an independent exponential local-time level, then the Bessel-type motion.

    The pasted path has the law of the diffusion started at y.
    """
    _check_scale(spec, scale)
    cfg = _decomposition_config(scale, y, horizon, dt, 1, options)
    return _sample_one(scale, cfg, cfg.mixing_law(scale), rng).path


def sample_decomposition_batch(
    spec: DiffusionSpec, scale: ScaleTable, y: float, horizon: float, dt: float, seed: int, n_paths: int, workers: int = WORKERS, **options
) -> BridgeBatch:
    _check_scale(spec, scale)
    cfg = _decomposition_config(scale, y, horizon, dt, n_paths, options)
    return _sample_batch(scale, cfg, cfg.mixing_law(scale), seed, workers)
