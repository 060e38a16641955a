import math
from dataclasses import dataclass
from functools import cache
from typing import Callable

import numpy as np
import structlog

from ltbridge.bridge.bridge_config import BridgeConfig
from ltbridge.bridge.lt_independence import lt_independence_check
from ltbridge.bridge.sample_bridge import sample_bridge_batch, sample_decomposition_batch, sample_randomized_bridge_batch
from ltbridge.common.config import REENTRY_BUDGET, SCALE_CHECK_TOL, SEED_VOTES, SEED_VOTES_REQUIRED
from ltbridge.common.errors import DegenerateBatchError, IncompleteBridgeError, SampleSizeError
from ltbridge.diffusion.build_scale import ScaleTable, build_scale, compare_with_closed_form
from ltbridge.diffusion.diffusion_spec import builtin
from ltbridge.diffusion.potential import rho, terminal_lt_rate
from ltbridge.harness.experiment_config import ExperimentConfig
from ltbridge.harness.write_outputs import write_outputs
from ltbridge.simulation.euler_engine import EulerBatch, Path, StopRule, simulate_batch, spec_drift
from ltbridge.simulation.local_time import default_bandwidth
from ltbridge.simulation.terminal_local_time import terminal_local_times
from ltbridge.simulation.worker_pool import map_paths
from ltbridge.stats.checks import (
    bernoulli_check,
    exp_fit_check,
    ks_one_sample_check,
    ks_two_sample_check,
    majority_vote,
    mean_check,
    two_mean_check,
    within_stderr,
)
from ltbridge.stats.oracles import band_local_time_mean, survival_probability, truncated_hitting_time_cdf
from ltbridge.stats.report import TestReport, TestReportEntry
from ltbridge.transforms.drifts import TransformedSpec
from ltbridge.transforms.entrance_launcher import EntranceLauncher, default_offset, launch_entrance_batch
from ltbridge.transforms.identity_checks import (
    conditioned_exit_sample,
    killed_bm_recurrent_check,
    last_passage_sample,
    semigroup_identity_check,
)
from ltbridge.transforms.survival_estimator import survival_by_direct_simulation, survival_by_recurrent_transform

logger = structlog.get_logger()

# deterministic numerical checks
RECURRENT_DRIFT_TOL = 1e-8
OCCUPATION_TOL = 0.05
SCALE_GRID_POINTS = 200


@dataclass(frozen=True)
class Profile:
    n: int
    dt: float


PROFILES = {"desk": Profile(n=10_000, dt=1e-4), "quick": Profile(n=2_000, dt=1e-3)}


@dataclass(frozen=True)
class SuiteContext:
    profile: Profile
    alpha: float
    workers: int

    @property
    def n(self) -> int:
        return self.profile.n

    @property
    def dt(self) -> float:
        return self.profile.dt


@dataclass(frozen=True)
class SuiteCheck:
    """One check of a suite; ``run`` may return several entries from a single simulation."""

    name: str
    run: Callable[[SuiteContext, int], list[TestReportEntry]]
    voted: bool = True


def resolve_profile(config: ExperimentConfig) -> Profile:
    """--scale picks the profile; an explicit --n or --dt overrides it."""
    base = PROFILES[config.scale]
    explicit = config.model_fields_set
    return Profile(n=config.n if "n" in explicit else base.n, dt=config.dt if "dt" in explicit else base.dt)


@cache
def _model(model: str, **params) -> ScaleTable:
    return build_scale(builtin(model, **params))


def _direct(ctx: SuiteContext, scale: ScaleTable, x0: float, horizon: float, seed: int, indices: range, **options) -> list[Path]:
    options.setdefault("record_every", None)
    stop = StopRule(horizon=horizon)
    return map_paths(
        lambda idx: simulate_batch(scale.spec, None, x0, stop, ctx.dt, seed, idx, scale=scale, **options), indices, ctx.workers
    )


def _observed(paths: list[Path], t: float) -> np.ndarray:
    values = np.array([p.observations[t] for p in paths])
    return values[np.isfinite(values)]


def _bounded_entry(name: str, oracle: str, value: float, bound: float, n: int, notes: str = "") -> TestReportEntry:
    return TestReportEntry(name=name, oracle=oracle, statistic=value, n=n, passed=bool(value <= bound), notes=notes)


def _inconclusive(name: str, error: Exception) -> TestReportEntry:
    return TestReportEntry(name=name, oracle="-", statistic=0.0, n=0, passed=False, inconclusive=True, notes=str(error))


# core


def core_terminal_local_time(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    entries = []
    for model, params, y, horizon in (("killed_bm", {"b": 1.0}, 0.0, 4.0), ("sq_bessel", {"delta": 4.0}, 2.0, 5.0)):
        scale = _model(model, **params)
        lt = terminal_local_times(scale, y, y, horizon, ctx.dt, seed, range(ctx.n), bridge_correction=True)
        entries.append(exp_fit_check(lt.values, terminal_lt_rate(scale, y), ctx.alpha, name=f"{model} L^{y:g}_inf law"))
    return entries


def core_first_passage(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    """Killed BM b=1 from 0: hitting times of 1 and the killed fraction at t=1."""
    horizon = 2.0
    scale = _model("killed_bm", b=1.0)
    paths = _direct(ctx, scale, 0.0, horizon, seed, range(ctx.n), bridge_correction=True)
    lifetimes = np.array([p.lifetime for p in paths])
    hit = lifetimes[np.isfinite(lifetimes)]
    return [
        ks_one_sample_check(
            "killed_bm T_1 law", f"first-passage law truncated at {horizon:g}", hit, truncated_hitting_time_cdf(1.0, horizon), ctx.alpha
        ),
        bernoulli_check(int((lifetimes <= 1.0).sum()), len(paths), 1.0 - survival_probability(1.0, 1.0), ctx.alpha, name="killed_bm killed by t=1"),
    ]


def core_local_time_estimator(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    return [_band_local_time_entry(ctx, seed, ctx.dt)]


def _band_local_time_entry(ctx: SuiteContext, seed: int, dt: float) -> TestReportEntry:
    """E L^0_1 of BM against the band-averaged Tanaka mean for the default bandwidth at ``dt``."""
    # b far away so that killing is negligible on [0, 1]
    scale = _model("killed_bm", b=20.0)
    eps = default_bandwidth(1.0, dt)
    stop = StopRule(horizon=1.0)
    paths = map_paths(
        lambda idx: simulate_batch(scale.spec, None, 0.0, stop, dt, seed, idx, scale=scale, lt_levels=(0.0,), record_every=None),
        range(ctx.n),
        ctx.workers,
    )
    target = band_local_time_mean(1.0, eps)
    return mean_check(
        [p.local_time[0.0] for p in paths], target, name=f"BM L^0_1, eps={eps:.3g}", oracle=f"band-averaged Tanaka mean {target:.5g}"
    )


# bridge


def bridge_pinning(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    entries = []
    for model, params in (("killed_bm", {"b": 1.0}), ("ou", {"r_coef": 1.0, "b_coef": 0.0})):
        scale = _model(model, **params)
        for a in (0.5, 2.0):
            cfg = BridgeConfig(y=0.0, a=a, dt=ctx.dt, n_paths=ctx.n, bridge_correction=True)
            batch = sample_bridge_batch(scale.spec, scale, cfg, seed, ctx.workers)
            errors = batch.pinning_errors()
            if not len(errors):
                raise DegenerateBatchError(f"no {model} bridge reached phase 2")
            tol = batch.pinning_tolerance(a)
            switched = f"switched {batch.switched_fraction:.4f}"
            entries.append(
                _bounded_entry(f"{model} a={a:g} pinning", f"median |L_terminal - a| <= {tol:.3g}", float(np.median(errors)), tol, len(errors), switched)
            )
            entries.append(
                _bounded_entry(f"{model} a={a:g} band re-entry", f"fraction <= {REENTRY_BUDGET:g}", batch.reentry_fraction(), REENTRY_BUDGET, len(errors), switched)
            )
    return entries


def bridge_randomized(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    """OU randomized bridge with the exponential mixing law against direct simulation from y."""
    y, t = 0.3, 1.0
    scale = _model("ou", r_coef=1.0, b_coef=0.0)
    cfg = BridgeConfig(y=y, horizon=2.0, dt=ctx.dt, n_paths=ctx.n, observe=(t,))
    batch = sample_randomized_bridge_batch(scale.spec, scale, cfg, seed, ctx.workers)
    direct = _direct(ctx, scale, y, t, seed, range(ctx.n, 2 * ctx.n), lt_levels=(y,), observe=(t,))
    ones, n = batch.theta_count()
    thetas, levels = batch.thetas(), batch.levels()
    corr = float(np.corrcoef(thetas, levels)[0, 1])
    return [
        bernoulli_check(ones, n, rho(scale, y), ctx.alpha, name="ou theta frequency"),
        within_stderr("ou theta vs level correlation", "independent", corr, 1.0 / math.sqrt(n), 0.0, n),
        ks_two_sample_check("ou randomized bridge X_1", "direct simulation", batch.observed(t), _observed(direct, t), ctx.alpha),
        ks_two_sample_check(
            "ou randomized bridge L^y_1",
            "direct simulation",
            batch.observed_local_time(t),
            [p.lt_observations[t][y] for p in direct],
            ctx.alpha,
        ),
    ]


# decomposition


def decomposition_killed_bm(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    t, horizon = 0.5, 2.0
    scale = _model("killed_bm", b=1.0)
    batch = sample_decomposition_batch(
        scale.spec, scale, 0.0, horizon, ctx.dt, seed, ctx.n, ctx.workers, observe=(t,), bridge_correction=True
    )
    direct = _direct(ctx, scale, 0.0, horizon, seed, range(ctx.n, 2 * ctx.n), observe=(t,), bridge_correction=True)
    return [
        ks_two_sample_check("killed_bm decomposition X_0.5", "direct simulation", batch.observed(t), _observed(direct, t), ctx.alpha),
        ks_two_sample_check(
            "killed_bm decomposition lifetime",
            f"direct simulation, censored at {horizon:g}",
            batch.lifetimes(),
            [min(p.lifetime, horizon) for p in direct],
            ctx.alpha,
        ),
    ]


def decomposition_sq_bessel(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    t, y = 0.5, 1.0
    scale = _model("sq_bessel", delta=4.0)
    batch = sample_decomposition_batch(scale.spec, scale, y, 1.0, ctx.dt, seed, ctx.n, ctx.workers, observe=(t,))
    direct = _direct(ctx, scale, y, 1.0, seed, range(ctx.n, 2 * ctx.n), observe=(t,))
    return [ks_two_sample_check("sq_bessel decomposition X_0.5", "direct simulation", batch.observed(t), _observed(direct, t), ctx.alpha)]


# reversal, independence, survival, semigroup, entrance


def reversal_killed_bm(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    """G_z of the Bessel-type motion from y against S_y of the motion from z conditioned to converge to y."""
    y, z, horizon = 0.0, 0.5, 4.0
    scale = _model("killed_bm", b=1.0)
    last, censored_g = last_passage_sample(scale, y, "high", z, horizon, ctx.dt, seed, range(ctx.n))
    hits, censored_s = conditioned_exit_sample(scale, y, "high", z, horizon, ctx.dt, seed, range(ctx.n, 2 * ctx.n))
    entry = ks_two_sample_check("killed_bm G_z vs S_y", "time reversal", last, hits, ctx.alpha)
    entry.notes = f"censored at {horizon:g}: {censored_g} last passages, {censored_s} hitting times"
    return [entry]


def independence_ou(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    y, horizon = 0.0, 10.0
    scale = _model("ou", r_coef=1.0, b_coef=0.0)
    entries = []
    for k, x in enumerate((y, 0.707)):
        indices = range(2 * k * ctx.n, 2 * (k + 1) * ctx.n)
        paths = _direct(ctx, scale, x, horizon, seed, indices, lt_levels=(y,))
        entries.append(lt_independence_check(scale.spec, scale, x, y, paths, ctx.alpha))
    return entries


def survival_identity(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    kbm = _model("killed_bm", b=1.0)
    est = survival_by_recurrent_transform(kbm, 0.0, 0.0, 1.0, ctx.dt, seed, ctx.n, bridge_correction=True)
    target = survival_probability(1.0, 1.0)
    ou = _model("ou", r_coef=1.0, b_coef=0.0)
    weighted = survival_by_recurrent_transform(ou, 0.0, 0.0, 1.0, ctx.dt, seed, ctx.n)
    direct = survival_by_direct_simulation(ou, 0.0, 1.0, ctx.dt, seed, ctx.n, first_index=ctx.n)
    se = math.hypot(weighted.stderr, direct.stderr)
    return [
        within_stderr("killed_bm survival to t=1", f"2 Phi(1) - 1 = {target:.5f}", est.value, est.stderr, target, est.n),
        within_stderr("ou survival, weighted vs direct", "equal estimates", weighted.value - direct.value, se, 0.0, weighted.n),
    ]


def semigroup_killed_bm(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    scale = _model("killed_bm", b=1.0)
    entries = []
    for side, x in (("low", -0.5), ("high", 0.5)):
        check = semigroup_identity_check(scale, 0.0, side, x, 0.25, lambda v: v, ctx.n, ctx.dt, seed)
        entries.append(
            within_stderr(
                f"killed_bm {side} semigroup, f(x)=x",
                "h-weighted killed diffusion",
                check.difference,
                check.combined_stderr,
                0.0,
                check.bessel.n,
            )
        )
    return entries


def entrance_launchers(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    """Exact Bessel-3 launch against the offset launch, at the default offset and at half of it."""
    y, t = 0.0, 0.5
    scale = _model("killed_bm", b=1.0)
    spec_t = TransformedSpec(scale, "bessel_high", y)
    stop = StopRule(horizon=t)
    options = dict(observe=(t,), record_every=None, bridge_correction=True)
    offset = default_offset(scale, y, "high", ctx.dt)

    def launch(launcher: EntranceLauncher, k: int) -> list[Path]:
        indices = range(k * ctx.n, (k + 1) * ctx.n)
        return map_paths(lambda idx: launch_entrance_batch(spec_t, launcher, stop, ctx.dt, seed, idx, **options), indices, ctx.workers)

    exact = launch(EntranceLauncher("exact"), 0)
    entries = []
    for k, delta in ((1, offset), (2, offset / 2.0)):
        shifted = launch(EntranceLauncher("offset", offset=delta), k)
        entries.append(
            ks_two_sample_check(f"entrance exact vs offset {delta:.3g}", "exact launcher", _observed(exact, t), _observed(shifted, t), ctx.alpha)
        )
    reflected = sum(p.reflections > 0 for p in exact) / len(exact)
    entries.append(_bounded_entry("entrance exact launch reflections", f"fraction <= {REENTRY_BUDGET:g}", reflected, REENTRY_BUDGET, len(exact)))
    return entries


# numerics


def numerics_scale(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    entries = []
    for model, params in (("killed_bm", {"b": 1.0}), ("ou", {"r_coef": 1.0, "b_coef": 0.0}), ("ou", {"r_coef": 2.0, "b_coef": 1.0}), ("sq_bessel", {"delta": 4.0})):
        spec = builtin(model, **params)
        points = spec.probe_grid(SCALE_GRID_POINTS)
        error = compare_with_closed_form(spec, points)
        label = ", ".join(f"{k}={v:g}" for k, v in params.items())
        entries.append(_bounded_entry(f"{model}({label}) scale quadrature", f"closed form, max error <= {SCALE_CHECK_TOL:g}", error, SCALE_CHECK_TOL, len(points)))
    probes = [0.1, 0.25, 0.5, 0.9, 1.5, 3.0]
    worst = killed_bm_recurrent_check(1.0, probes)
    entries.append(_bounded_entry("killed_bm recurrent drift vs Bessel-3", "1{U<b} / U", worst, RECURRENT_DRIFT_TOL, len(probes)))
    return entries


class _OccupationSum:
    """After-step hook accumulating the left-point Riemann sum of 1_J(X) sigma^2(X) dt."""

    def __init__(self, engine: EulerBatch, lo: float, hi: float):
        self.engine = engine
        self.lo = lo
        self.hi = hi
        self.total = np.zeros(engine.n)

    def __call__(self, act: np.ndarray, xa: np.ndarray, x_new: np.ndarray) -> np.ndarray:
        sig = np.asarray(self.engine.spec.sigma(xa), dtype=float) * np.ones_like(xa)
        inside = (xa >= self.lo) & (xa < self.hi)
        self.total[act] += np.where(inside, sig * sig * self.engine.dt, 0.0)
        return x_new


def numerics_occupation(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    """int_0^1 1_J(X) sigma^2 ds against int_J L^x dx from trackers on the cell midpoints of J."""
    lo, hi, horizon = -0.5, 0.5, 1.0
    scale = _model("killed_bm", b=20.0)
    n_cells = max(4, int(round((hi - lo) / (2.0 * default_bandwidth(1.0, ctx.dt)))))
    width = (hi - lo) / n_cells
    levels = tuple(lo + width * (k + 0.5) for k in range(n_cells))

    def job(idx):
        engine = EulerBatch(
            scale.spec, spec_drift(scale.spec), 0.0, ctx.dt, seed, idx, scale=scale,
            lt_levels=levels, bandwidths=[width / 2.0] * n_cells, record_every=None,
        )
        occupation = _OccupationSum(engine, lo, hi)
        engine.after_step = occupation
        engine.set_stop(StopRule(horizon=horizon))
        engine.run(horizon)
        by_level = engine.local_times()
        integral = width * sum(by_level[level] for level in levels)
        return list(zip(occupation.total, integral))

    pairs = np.array(map_paths(job, range(ctx.n), ctx.workers))
    riemann, from_trackers = pairs[:, 0].mean(), pairs[:, 1].mean()
    relative = abs(from_trackers - riemann) / riemann
    return [
        _bounded_entry(
            "occupation formula on [-0.5, 0.5]", f"relative gap <= {OCCUPATION_TOL:g}", relative, OCCUPATION_TOL, len(pairs),
            notes=f"Riemann {riemann:.5g}, trackers {from_trackers:.5g}, {n_cells} levels",
        )
    ]


def numerics_grid_refinement(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    """Mean of X_0.5 for killed BM at 2 dt and dt agree within 3 combined standard errors."""
    horizon = 0.5
    scale = _model("killed_bm", b=1.0)
    stop = StopRule(horizon=horizon)
    means = []
    for k, dt in enumerate((2.0 * ctx.dt, ctx.dt)):
        indices = range(k * ctx.n, (k + 1) * ctx.n)
        paths = map_paths(
            lambda idx: simulate_batch(scale.spec, None, 0.0, stop, dt, seed, idx, scale=scale, record_every=None, bridge_correction=True),
            indices,
            ctx.workers,
        )
        means.append([p.terminal_value for p in paths])
    return [two_mean_check(means[0], means[1], name="killed_bm X_0.5, dt halved", oracle="weak-order consistency")]


def numerics_bandwidth(ctx: SuiteContext, seed: int) -> list[TestReportEntry]:
    """The band estimator at eps and eps/2 (dt / 4), each against its band-averaged oracle."""
    return [_band_local_time_entry(ctx, seed, ctx.dt), _band_local_time_entry(ctx, seed, ctx.dt / 4.0)]


SUITES: dict[str, list[SuiteCheck]] = {
    "core": [
        SuiteCheck("terminal local time", core_terminal_local_time),
        SuiteCheck("first passage", core_first_passage),
        SuiteCheck("local-time estimator", core_local_time_estimator),
    ],
    "bridge": [SuiteCheck("bridge pinning", bridge_pinning), SuiteCheck("randomized bridge", bridge_randomized)],
    "decomposition": [
        SuiteCheck("killed_bm decomposition", decomposition_killed_bm),
        SuiteCheck("sq_bessel decomposition", decomposition_sq_bessel),
    ],
    "reversal": [SuiteCheck("time reversal", reversal_killed_bm)],
    "independence": [SuiteCheck("local-time independence", independence_ou)],
    "survival": [SuiteCheck("survival identity", survival_identity)],
    "semigroup": [SuiteCheck("semigroup identity", semigroup_killed_bm)],
    "entrance": [SuiteCheck("entrance launchers", entrance_launchers)],
    "numerics": [
        SuiteCheck("scale quadrature", numerics_scale, voted=False),
        SuiteCheck("occupation formula", numerics_occupation),
        SuiteCheck("grid refinement", numerics_grid_refinement),
        SuiteCheck("bandwidth consistency", numerics_bandwidth),
    ],
}


def suite_checks(suite: str) -> list[SuiteCheck]:
    if suite == "all":
        return [check for checks in SUITES.values() for check in checks]
    return SUITES[suite]


def run_check(check: SuiteCheck, ctx: SuiteContext, seeds: list[int]) -> list[TestReportEntry]:
    """Run ``check`` on every seed and reduce each entry by majority vote."""
    by_name: dict[str, list[TestReportEntry]] = {}
    for seed in seeds if check.voted else seeds[:1]:
        log = logger.bind(check=check.name, seed=seed)
        try:
            entries = check.run(ctx, seed)
        except (SampleSizeError, DegenerateBatchError, IncompleteBridgeError) as e:
            log.warning("check inconclusive", error=str(e))
            entries = [_inconclusive(check.name, e)]
        for entry in entries:
            by_name.setdefault(entry.name, []).append(entry)
    if not check.voted:
        return [group[0] for group in by_name.values()]
    return [majority_vote(group, SEED_VOTES_REQUIRED) for group in by_name.values()]


def cmd_validate(config: ExperimentConfig) -> TestReport:
    profile = resolve_profile(config)
    ctx = SuiteContext(profile=profile, alpha=config.alpha, workers=config.workers)
    seeds = [config.seed + i for i in range(SEED_VOTES)]
    log = logger.bind(suite=config.suite, n=profile.n, dt=profile.dt, seeds=seeds)
    log.info("validation started")
    report = TestReport()
    for check in suite_checks(config.suite):
        for entry in run_check(check, ctx, seeds):
            report.add(entry)
    log.info("validation finished", entries=len(report.entries), failures=len(report.failures))
    if config.out is not None:
        write_outputs(config.out, {"report.json": report.to_json() + "\n"})
    return report
