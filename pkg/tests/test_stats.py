import json
import math

import numpy as np
import pytest
import scipy.stats

from ltbridge.common.errors import DegenerateBatchError, DomainError, SampleSizeError
from ltbridge.stats import (
    TestReport,
    TestReportEntry,
    band_local_time_mean,
    bernoulli_check,
    exp_fit_check,
    hitting_time_cdf,
    ks_one_sample,
    ks_one_sample_check,
    ks_two_sample,
    majority_vote,
    survival_probability,
    tanaka_mean,
    truncated_hitting_time_cdf,
    two_mean_check,
    within_stderr,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def entry(passed: bool, inconclusive: bool = False, statistic: float = 1.0) -> TestReportEntry:
    return TestReportEntry(name="check", oracle="oracle", statistic=statistic, p_value=0.5, n=100, passed=passed, inconclusive=inconclusive)


class TestKolmogorovSmirnov:
    def test_rejects_wrong_law(self, rng):
        samples = rng.exponential(scale=1.0, size=1000)
        _, p_value = ks_one_sample(samples, lambda t: scipy.stats.expon.cdf(t, scale=2.0))
        assert p_value < 1e-6

    def test_accepts_right_law(self, rng):
        samples = rng.exponential(scale=1.0, size=1000)
        check = ks_one_sample_check("exp", "Exp(1)", samples, scipy.stats.expon.cdf)
        assert check.passed
        assert check.n == 1000

    def test_non_finite_samples_dropped(self, rng):
        samples = np.concatenate([rng.random(60), [math.nan, math.inf]])
        check = ks_one_sample_check("uniform", "U(0,1)", samples, scipy.stats.uniform.cdf)
        assert check.n == 60

    def test_too_few_samples(self):
        with pytest.raises(SampleSizeError):
            ks_one_sample(np.linspace(0.1, 0.9, 10), scipy.stats.uniform.cdf)

    def test_two_sample(self, rng):
        a = rng.normal(size=500)
        statistic, p_value = ks_two_sample(a, a + 1.0)
        assert statistic > 0.3
        assert p_value < 1e-6

    def test_identical_lists(self, rng):
        a = rng.normal(size=200)
        statistic, p_value = ks_two_sample(a, a.copy())
        assert statistic == 0.0
        assert p_value == pytest.approx(1.0)

    def test_invariant_under_increasing_maps(self, rng):
        a = rng.normal(size=400)
        b = rng.normal(loc=0.2, size=400)
        base = ks_two_sample(a, b)
        knots = np.linspace(-10.0, 10.0, 50)
        heights = np.cumsum(rng.uniform(0.1, 2.0, size=50))
        random_map = lambda v: np.interp(v, knots, heights)
        for f in (np.exp, lambda v: v**3 + v, random_map):
            assert ks_two_sample(f(a), f(b)) == pytest.approx(base)

    def test_twenty_percent_rate_gap_is_detected(self, rng):
        _, p_value = ks_two_sample(rng.exponential(scale=1.0, size=10_000), rng.exponential(scale=1.0 / 1.2, size=10_000))
        assert p_value < 0.01


class TestCalibration:
    def test_rejection_rate_under_the_null(self):
        rng = np.random.default_rng(101)
        p_values = [ks_one_sample(rng.random(200), scipy.stats.uniform.cdf)[1] for _ in range(1000)]
        rate = np.mean(np.array(p_values) <= 0.01)
        assert 0.002 <= rate <= 0.03

    def test_same_law_batches_rarely_rejected(self):
        # 100 repetitions per seed, at least 98 kept in 2 of 3 seeds
        kept = []
        for seed in (1, 2, 3):
            rng = np.random.default_rng(seed)
            kept.append(sum(ks_two_sample(rng.exponential(size=300), rng.exponential(size=300))[1] > 0.01 for _ in range(100)))
        assert sum(k >= 98 for k in kept) >= 2


class TestChecks:
    def test_exp_fit(self, rng):
        samples = rng.exponential(scale=2.0, size=2000)
        assert exp_fit_check(samples, 0.5).passed
        assert not exp_fit_check(samples, 1.0).passed

    def test_bernoulli(self):
        assert bernoulli_check(50, 100, 0.5).passed
        assert not bernoulli_check(90, 100, 0.5).passed
        assert bernoulli_check(100, 100, 1.0).passed
        assert bernoulli_check(5000, 10_000, 0.5).passed
        assert not bernoulli_check(5250, 10_000, 0.5).passed
        with pytest.raises(SampleSizeError):
            bernoulli_check(10, 50, 0.5)

    def test_within_stderr(self):
        ok = within_stderr("m", "o", 1.0, 0.1, 1.2, 100)
        assert ok.passed
        assert ok.statistic == pytest.approx(-2.0)
        assert not within_stderr("m", "o", 1.0, 0.1, 1.5, 100).passed
        assert within_stderr("m", "o", 1.0, 0.0, 1.0, 100).passed

    def test_two_mean(self, rng):
        x = rng.normal(size=500)
        assert two_mean_check(x, x.copy()).passed
        shifted = two_mean_check(x, x + 1.0)
        assert not shifted.passed
        assert shifted.n2 == 500
        with pytest.raises(DegenerateBatchError):
            two_mean_check([1.0], [1.0, 2.0])

    def test_majority_vote(self):
        assert majority_vote([entry(True), entry(True), entry(False)]).passed
        assert not majority_vote([entry(True), entry(False), entry(False)]).passed

    def test_vote_ignores_inconclusive(self):
        voted = majority_vote([entry(True), entry(False, inconclusive=True), entry(True)])
        assert voted.passed
        assert not voted.inconclusive
        everything_open = majority_vote([entry(False, inconclusive=True)] * 3)
        assert everything_open.inconclusive
        with pytest.raises(DegenerateBatchError):
            majority_vote([])


class TestReportOutput:
    def test_verdicts(self):
        report = TestReport()
        report.add(entry(True))
        report.add(entry(False, inconclusive=True))
        assert report.passed
        report.add(entry(False))
        assert not report.passed
        assert len(report.failures) == 1

    def test_table_and_json(self):
        report = TestReport(entries=[entry(True), entry(False)])
        table = report.render_table()
        assert "FAIL" in table
        assert "2 entries, 1 failed" in table
        data = json.loads(report.to_json())
        assert [e["passed"] for e in data["entries"]] == [True, False]


class TestOracles:
    def test_hitting_time(self):
        assert float(hitting_time_cdf(1.0, 1.0)) == pytest.approx(0.3173105, abs=1e-6)
        assert float(hitting_time_cdf(0.0, 1.0)) == 0.0

    def test_truncated_hitting_time(self):
        cdf = truncated_hitting_time_cdf(1.0, 2.0)
        assert float(cdf(2.0)) == pytest.approx(1.0)
        assert float(cdf(5.0)) == 1.0

    def test_survival(self):
        assert survival_probability(1.0, 1.0) == pytest.approx(0.6826895, abs=1e-6)

    def test_band_local_time_mean(self):
        assert band_local_time_mean(1.0, 0.05) == pytest.approx(tanaka_mean(1.0) - 0.025, abs=1e-3)
        assert band_local_time_mean(1.0, 1e-4) == pytest.approx(tanaka_mean(1.0), abs=1e-4)
        with pytest.raises(DomainError):
            band_local_time_mean(1.0, 0.0)
