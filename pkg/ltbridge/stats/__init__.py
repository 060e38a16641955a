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
from ltbridge.stats.ks_tests import ks_one_sample, ks_two_sample
from ltbridge.stats.oracles import (
    band_local_time_mean,
    hitting_time_cdf,
    survival_probability,
    tanaka_mean,
    truncated_hitting_time_cdf,
)
from ltbridge.stats.report import TestReport, TestReportEntry

__all__ = [
    "TestReport",
    "TestReportEntry",
    "band_local_time_mean",
    "bernoulli_check",
    "exp_fit_check",
    "hitting_time_cdf",
    "ks_one_sample",
    "ks_one_sample_check",
    "ks_two_sample",
    "ks_two_sample_check",
    "majority_vote",
    "mean_check",
    "survival_probability",
    "tanaka_mean",
    "truncated_hitting_time_cdf",
    "two_mean_check",
    "within_stderr",
]
