from collections import Counter

import numpy as np
import structlog

from ltbridge.bridge.bridge_batch import BridgeBatch
from ltbridge.bridge.bridge_config import BridgeConfig
from ltbridge.bridge.sample_bridge import sample_bridge_batch, sample_decomposition_batch, sample_randomized_bridge_batch
from ltbridge.common.errors import ConfigError
from ltbridge.diffusion.build_scale import ScaleTable, build_scale
from ltbridge.diffusion.classify_boundary import boundary_kinds
from ltbridge.diffusion.diffusion_spec import DiffusionSpec
from ltbridge.diffusion.potential import hitting_prob, potential_density, rho, terminal_lt_rate
from ltbridge.diffusion.spec_file import SpecFile, load_spec_file
from ltbridge.diffusion.speed_measure import speed_density
from ltbridge.harness.experiment_config import DEFAULT_HORIZONS, ExperimentConfig
from ltbridge.harness.write_outputs import csv_columns, dumps, jsonl, write_outputs
from ltbridge.simulation.euler_engine import Path, StopRule, exit_side, simulate_batch
from ltbridge.simulation.worker_pool import map_paths
from ltbridge.transforms.drifts import TransformedSpec

logger = structlog.get_logger()

# points kept per dumped path
RECORDED_POINTS = 1000


def _spec_file(config: ExperimentConfig) -> SpecFile:
    if config.spec is None:
        raise ConfigError("--spec is required")
    return load_spec_file(config.spec)


def load_model(config: ExperimentConfig) -> tuple[DiffusionSpec, ScaleTable]:
    spec = _spec_file(config).to_spec()
    return spec, build_scale(spec)


def _level(config: ExperimentConfig, spec: DiffusionSpec) -> float:
    y = spec.anchor if config.y is None else config.y
    spec.check_inside(y, "y")
    return y


def _horizon(config: ExperimentConfig, spec: DiffusionSpec) -> float:
    return config.horizon or DEFAULT_HORIZONS.get(spec.name, DEFAULT_HORIZONS["custom"])


def _record_every(config: ExperimentConfig, horizon: float) -> int | None:
    if not config.paths:
        return None
    return max(1, int(round(horizon / config.dt / RECORDED_POINTS)))


def _path_files(paths: list[Path], y: float | None = None) -> dict[str, str]:
    files = {}
    for p in paths:
        files[f"paths/path_{p.index:06d}.csv"] = csv_columns(("t", "x"), p.times, p.values)
        if y is not None and p.lt_observations:
            times = sorted(t for t in p.lt_observations if t <= p.terminal_time)
            files[f"trackers/tracker_{p.index:06d}.csv"] = csv_columns(
                ("t", "L"), times, [p.lt_observations[t][y] for t in times]
            )
    return files


def cmd_inspect(config: ExperimentConfig) -> str:
    """Analytic summary of the diffusion: scale, speed, hitting and potential quantities on a grid."""
    spec, scale = load_model(config)
    y = _level(config, spec)
    kinds = boundary_kinds(spec, scale)
    lam = terminal_lt_rate(scale, y)
    lines = [
        f"model            {spec.name} {dumps(spec.params)}",
        f"state space      ({spec.left!r}, {spec.right!r})",
        f"scale            {scale.source}, case {scale.case}, s(l+)={scale.s_l!r}, s(r-)={scale.s_r!r}",
        f"boundaries       left={kinds[0]}, right={kinds[1]}",
        f"y                {y!r}",
        f"s(y)             {scale.value(y):.10g}",
        f"rho(y)           {rho(scale, y):.10g}",
        f"lambda(y)        {lam:.10g}",
        f"mean L^y_inf     {1.0 / lam:.10g}",
        "",
        f"{'x':>14} {'s':>14} {'ds':>14} {'m':>14} {'psi(x,y)':>14} {'u(x,y)':>14}",
    ]
    for x in spec.probe_grid(21):
        x = float(x)
        lines.append(
            f"{x:>14.6g} {scale.value(x):>14.8g} {scale.derivative(x):>14.8g} {speed_density(spec, scale, x):>14.8g} "
            f"{hitting_prob(scale, x, y):>14.8g} {potential_density(scale, x, y):>14.8g}"
        )
    return "\n".join(lines)


def cmd_simulate(config: ExperimentConfig) -> dict:
    """Plain Euler batch, or of the transformed diffusion when the spec file names a transform."""
    spec_file = _spec_file(config)
    spec = spec_file.to_spec()
    scale = build_scale(spec)
    drift_fn, domain = None, None
    if spec_file.transform is not None:
        spec_t = TransformedSpec(scale, spec_file.transform.kind, spec_file.transform.y)
        drift_fn, domain = spec_t.batch_drift(), spec_t.engine_domain()
    y = None if config.y is None else _level(config, spec)
    x0 = config.x0 if config.x0 is not None else (y if y is not None else spec.anchor)
    horizon = _horizon(config, spec)
    record_every = _record_every(config, horizon)
    observe = ()
    if record_every and y is not None:
        observe = tuple(k * record_every * config.dt for k in range(int(horizon / (record_every * config.dt)) + 1))
    stop = StopRule(horizon=horizon)

    def job(indices):
        return simulate_batch(
            spec,
            drift_fn,
            x0,
            stop,
            config.dt,
            config.seed,
            indices,
            scale=scale,
            domain=domain,
            lt_levels=() if y is None else (y,),
            bandwidths=None if config.eps is None or y is None else (config.eps,),
            record_every=record_every,
            observe=observe,
            bridge_correction=config.bridge_correction,
        )

    paths = map_paths(job, range(config.n), config.workers)
    records = [
        {
            "seed": p.seed,
            "index": p.index,
            "stop_reason": p.stop_reason,
            "killed": p.killed,
            "lifetime": p.lifetime,
            "terminal_time": p.terminal_time,
            "terminal_value": p.terminal_value,
            "local_time": None if y is None else p.local_time[y],
            "exit_side": exit_side(spec, scale, p),
        }
        for p in paths
    ]
    alive = np.array([p.terminal_value for p in paths if p.stop_reason == "horizon"])
    summary = {
        "model": spec.name,
        "transform": None if spec_file.transform is None else spec_file.transform.model_dump(),
        "n_paths": len(paths),
        "dt": config.dt,
        "horizon": horizon,
        "x0": x0,
        "killed_fraction": sum(p.killed for p in paths) / len(paths),
        "stop_reasons": dict(sorted(Counter(p.stop_reason for p in paths).items())),
        "terminal_stats": {
            "n": len(alive),
            "mean": float(alive.mean()) if len(alive) else None,
            "std": float(alive.std(ddof=1)) if len(alive) > 1 else None,
            "min": float(alive.min()) if len(alive) else None,
            "max": float(alive.max()) if len(alive) else None,
        },
    }
    if config.out is not None:
        files = {"simulate.jsonl": jsonl(records), "summary.json": dumps(summary) + "\n"}
        if config.paths:
            files.update(_path_files(paths, y))
        write_outputs(config.out, files)
    return summary


def _bridge_config(config: ExperimentConfig, scale: ScaleTable, y: float) -> BridgeConfig:
    """Without --horizon the bridge uses its own level-based default horizon."""
    cfg = BridgeConfig(
        y=y,
        a=config.a,
        g=config.g,
        horizon=config.horizon,
        dt=config.dt,
        eps=config.eps,
        launcher=config.launcher,
        n_paths=config.n,
        bridge_correction=config.bridge_correction,
    )
    return cfg.model_copy(update={"record_every": _record_every(config, cfg.resolved_horizon(scale))})


def _emit_batch(config: ExperimentConfig, name: str, batch: BridgeBatch, extra: dict) -> dict:
    summary = {**extra, **batch.summary()}
    if config.out is not None:
        files = {f"{name}.jsonl": jsonl(batch.records()), "summary.json": dumps(summary) + "\n"}
        if config.paths:
            files.update(_path_files([o.path for o in batch.outcomes]))
        write_outputs(config.out, files)
    return summary


def cmd_bridge(config: ExperimentConfig) -> dict:
    spec, scale = load_model(config)
    y = _level(config, spec)
    cfg = _bridge_config(config, scale, y)
    if cfg.target == "fixed":
        batch = sample_bridge_batch(spec, scale, cfg, config.seed, config.workers)
    else:
        batch = sample_randomized_bridge_batch(spec, scale, cfg, config.seed, config.workers)
    law = cfg.mixing_law(scale)
    return _emit_batch(config, "bridge", batch, {"model": spec.name, "dt": config.dt, "law": law.model_dump(), "rho": rho(scale, y)})


def cmd_decompose(config: ExperimentConfig) -> dict:
    spec, scale = load_model(config)
    y = _level(config, spec)
    horizon = _horizon(config, spec)
    batch = sample_decomposition_batch(
        spec,
        scale,
        y,
        horizon,
        config.dt,
        config.seed,
        config.n,
        config.workers,
        eps=config.eps,
        launcher=config.launcher,
        bridge_correction=config.bridge_correction,
        record_every=_record_every(config, horizon),
    )
    extra = {"model": spec.name, "dt": config.dt, "rho": rho(scale, y), "gamma_mean": 1.0 / terminal_lt_rate(scale, y)}
    return _emit_batch(config, "decomposition", batch, extra)
