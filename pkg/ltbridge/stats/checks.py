import math
from typing import Callable, Literal, Sequence

import numpy as np
import scipy.stats
import structlog

from ltbridge.common.config import ALPHA, SEED_VOTES_REQUIRED
from ltbridge.common.errors import DegenerateBatchError, SampleSizeError
from ltbridge.stats.ks_tests import ks_one_sample, ks_two_sample
from ltbridge.stats.report import TestReportEntry

logger = structlog.get_logger()

MIN_BERNOULLI_SAMPLES = 100


def _verdict(p_value: float, alpha: float, expect: Literal["accept", "reject"]) -> bool:
    return p_value > alpha if expect == "accept" else p_value <= alpha


def ks_one_sample_check(
    name: str,
    oracle: str,
    samples: Sequence[float],
    cdf: Callable[[np.ndarray], np.ndarray],
    alpha: float = ALPHA,
    expect: Literal["accept", "reject"] = "accept",
) -> TestReportEntry:
    statistic, p_value = ks_one_sample(samples, cdf)
    n = int(np.isfinite(np.asarray(samples, dtype=float)).sum())
    return TestReportEntry(
        name=name, oracle=oracle, statistic=statistic, p_value=p_value, n=n, alpha=alpha, expect=expect,
        passed=_verdict(p_value, alpha, expect),
    )


def ks_two_sample_check(
    name: str,
    oracle: str,
    a: Sequence[float],
    b: Sequence[float],
    alpha: float = ALPHA,
    expect: Literal["accept", "reject"] = "accept",
) -> TestReportEntry:
    statistic, p_value = ks_two_sample(a, b)
    return TestReportEntry(
        name=name,
        oracle=oracle,
        statistic=statistic,
        p_value=p_value,
        n=int(np.isfinite(np.asarray(a, dtype=float)).sum()),
        n2=int(np.isfinite(np.asarray(b, dtype=float)).sum()),
        alpha=alpha,
        expect=expect,
        passed=_verdict(p_value, alpha, expect),
    )


def exp_fit_check(samples: Sequence[float], rate: float, alpha: float = ALPHA, name: str = "terminal local time") -> TestReportEntry:
    """KS against Exp(rate) together with the sample mean within 3 standard errors of 1/rate."""
    arr = np.asarray(samples, dtype=float)
    statistic, p_value = ks_one_sample(arr, lambda t: scipy.stats.expon.cdf(t, scale=1.0 / rate))
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(len(arr)))
    mean_ok = abs(mean - 1.0 / rate) <= 3.0 * se
    return TestReportEntry(
        name=name,
        oracle=f"exponential, rate {rate:.6g}",
        statistic=statistic,
        p_value=p_value,
        n=len(arr),
        alpha=alpha,
        passed=p_value > alpha and mean_ok,
        notes=f"mean {mean:.5g} vs {1.0 / rate:.5g} (se {se:.3g})",
    )


def bernoulli_check(count_ones: int, n: int, p: float, alpha: float = ALPHA, name: str = "theta frequency") -> TestReportEntry:
    """Two-sided normal-approximation test of count_ones / n against p."""
    if n < MIN_BERNOULLI_SAMPLES:
        raise SampleSizeError(f"bernoulli_check needs n >= {MIN_BERNOULLI_SAMPLES}, got {n}")
    if not 0 <= count_ones <= n:
        raise SampleSizeError(f"Invalid count {count_ones} of {n}")
    se = math.sqrt(p * (1.0 - p) / n)
    freq = count_ones / n
    if se == 0.0:
        z = 0.0 if freq == p else math.inf
        p_value = 1.0 if freq == p else 0.0
    else:
        z = (freq - p) / se
        p_value = float(2.0 * scipy.stats.norm.sf(abs(z)))
    return TestReportEntry(
        name=name,
        oracle=f"Bernoulli({p:.6g})",
        statistic=z,
        p_value=p_value,
        n=n,
        alpha=alpha,
        passed=p_value > alpha,
        notes=f"frequency {freq:.5g}",
    )


def within_stderr(
    name: str, oracle: str, value: float, stderr: float, target: float, n: int, k_se: float = 3.0
) -> TestReportEntry:
    """|value - target| <= k_se * stderr; statistic is the z-score."""
    if not stderr > 0:
        passed = value == target
        z = 0.0 if passed else math.inf
    else:
        z = (value - target) / stderr
        passed = abs(z) <= k_se
    return TestReportEntry(
        name=name,
        oracle=oracle,
        statistic=z,
        p_value=float(2.0 * scipy.stats.norm.sf(abs(z))),
        n=n,
        passed=passed,
        notes=f"{value:.6g} vs {target:.6g} (se {stderr:.3g}, k={k_se:g})",
    )


def mean_check(samples: Sequence[float], target: float, k_se: float = 3.0, name: str = "mean", oracle: str = "") -> TestReportEntry:
    arr = np.asarray(samples, dtype=float)
    if len(arr) < 2:
        raise DegenerateBatchError("mean_check needs at least two samples")
    return within_stderr(name, oracle or f"mean {target:.6g}", float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(len(arr))), target, len(arr), k_se)


def two_mean_check(a: Sequence[float], b: Sequence[float], k_se: float = 3.0, name: str = "two means", oracle: str = "") -> TestReportEntry:
    """Difference of the means within k_se combined standard errors."""
    arr_a, arr_b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if min(len(arr_a), len(arr_b)) < 2:
        raise DegenerateBatchError("two_mean_check needs at least two samples on each side")
    se = math.hypot(arr_a.std(ddof=1) / math.sqrt(len(arr_a)), arr_b.std(ddof=1) / math.sqrt(len(arr_b)))
    entry = within_stderr(name, oracle or "equal means", float(arr_a.mean() - arr_b.mean()), se, 0.0, len(arr_a), k_se)
    entry.n2 = len(arr_b)
    return entry


def majority_vote(results: Sequence[TestReportEntry], required: int = SEED_VOTES_REQUIRED) -> TestReportEntry:
    """Reduce per-seed verdicts of one check to a single entry that passes when at least ``required`` seeds pass."""
    if not results:
        raise DegenerateBatchError("no results to vote on")
    decided = [r for r in results if not r.inconclusive]
    first = results[0]
    if not decided:
        return first.model_copy(update={"notes": f"inconclusive on all {len(results)} seeds"})
    passes = sum(r.passed for r in decided)
    p_values = [r.p_value for r in decided if r.p_value is not None]
    votes = ", ".join("pass" if r.passed else "fail" for r in decided)
    return first.model_copy(
        update={
            "statistic": float(np.median([r.statistic for r in decided])),
            "p_value": float(np.median(p_values)) if p_values else None,
            "passed": passes >= min(required, len(decided)),
            "inconclusive": False,
            "notes": f"{passes}/{len(decided)} seeds passed ({votes}); {first.notes}",
        }
    )
