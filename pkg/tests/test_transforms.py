import math

import numpy as np
import pytest

from ltbridge.common.errors import ConfigError, DomainError
from ltbridge.simulation import StopRule
from ltbridge.simulation.euler_engine import Domain
from ltbridge.transforms import identity_checks
from ltbridge.transforms import (
    EntranceLauncher,
    TransformedSpec,
    bessel_drift,
    cond_exit_drift,
    conditioned_exit_sample,
    default_offset,
    killed_bm_recurrent_check,
    last_passage_sample,
    launch_entrance_batch,
    recurrent_drift,
    recurrent_likelihood_ratio,
    semigroup_identity_check,
    survival_by_direct_simulation,
    survival_by_recurrent_transform,
)

SURVIVAL_AT_ONE = 0.682689492  # P(max of BM over [0, 1] < 1)


class TestDrifts:
    def test_killed_bm_values(self, kbm):
        assert recurrent_drift(kbm, 0.0, 0.5) == pytest.approx(-2.0)
        assert recurrent_drift(kbm, 0.0, -0.5) == pytest.approx(0.0)
        assert bessel_drift(kbm, 0.0, "high", 0.5) == pytest.approx(2.0)
        assert bessel_drift(kbm, 0.0, "low", -0.5) == pytest.approx(-2.0)
        assert cond_exit_drift(kbm, 0.0, "high", 0.5) == pytest.approx(-2.0)

    def test_cond_exit_needs_finite_scale_end(self, kbm):
        with pytest.raises(ConfigError):
            cond_exit_drift(kbm, 0.0, "low", -0.5)

    def test_wrong_side(self, kbm):
        with pytest.raises(DomainError):
            bessel_drift(kbm, 0.0, "high", -0.5)
        with pytest.raises(DomainError):
            cond_exit_drift(kbm, 0.0, "high", -0.5)

    def test_ou_recurrent_drift_points_back(self, ou_scale):
        assert recurrent_drift(ou_scale, 0.0, 0.7) < 0.0
        assert recurrent_drift(ou_scale, 0.0, -0.7) > 0.0

    def test_recurrent_mirror_identity(self):
        assert killed_bm_recurrent_check(1.0, [0.1, 0.5, 0.9, 2.0, 5.0]) == pytest.approx(0.0, abs=1e-6)

    def test_recurrent_mirror_probes(self):
        with pytest.raises(DomainError):
            killed_bm_recurrent_check(1.0, [1.0])
        with pytest.raises(DomainError):
            killed_bm_recurrent_check(1.0, [0.0])


class TestTransformedSpec:
    def test_domains(self, kbm):
        assert TransformedSpec(kbm, "recurrent", 0.0).domain == (-math.inf, 1.0)
        assert TransformedSpec(kbm, "bessel_low", 0.0).domain == (-math.inf, 0.0)
        assert TransformedSpec(kbm, "bessel_high", 0.0).domain == (0.0, 1.0)

    def test_engine_domains(self, kbm):
        assert TransformedSpec(kbm, "bessel_high", 0.0).engine_domain() == Domain(0.0, 1.0, kill_lo=False, kill_hi=True)
        assert TransformedSpec(kbm, "cond_exit_high", 0.0).engine_domain() == Domain(0.0, 1.0, kill_lo=True, kill_hi=False)

    def test_invalid(self, kbm):
        with pytest.raises(ConfigError):
            TransformedSpec(kbm, "cond_exit_low", 0.0)
        with pytest.raises(DomainError):
            TransformedSpec(kbm, "recurrent", 2.0)

    def test_batch_drift_matches_scalar(self, kbm):
        spec_t = TransformedSpec(kbm, "bessel_high", 0.0)
        x = np.array([0.25, 0.5])
        assert spec_t.batch_drift()(x, np.arange(2)) == pytest.approx([bessel_drift(kbm, 0.0, "high", v) for v in x])


class TestSurvival:
    def test_likelihood_ratio(self, kbm):
        assert recurrent_likelihood_ratio(kbm, 0.0, 0.0, 0.0) == pytest.approx(1.0)
        assert recurrent_likelihood_ratio(kbm, 0.0, 0.0, 1.0) == pytest.approx(math.exp(0.5))

    def test_recurrent_transform_estimate(self, kbm):
        est = survival_by_recurrent_transform(kbm, 0.0, 0.0, 1.0, 1e-3, 12, 2000)
        assert est.n == 2000
        assert est.value == pytest.approx(SURVIVAL_AT_ONE, abs=4 * est.stderr + 0.02)

    def test_direct_estimate(self, kbm):
        est = survival_by_direct_simulation(kbm, 0.0, 1.0, 1e-3, 12, 2000, bridge_correction=True)
        assert est.value == pytest.approx(SURVIVAL_AT_ONE, abs=4 * est.stderr)

    def test_disjoint_streams(self, kbm):
        a = survival_by_direct_simulation(kbm, 0.0, 0.5, 1e-2, 3, 200)
        b = survival_by_direct_simulation(kbm, 0.0, 0.5, 1e-2, 3, 200, first_index=200)
        c = survival_by_direct_simulation(kbm, 0.0, 0.5, 1e-2, 3, 200)
        assert a == c
        assert a.n == b.n == 200


class TestEntrance:
    def test_default_offset_floor(self, kbm):
        assert default_offset(kbm, 0.0, "high", 1e-3) == pytest.approx(2.0 * math.sqrt(1e-3))

    def test_invalid_launcher(self, kbm):
        with pytest.raises(ConfigError):
            EntranceLauncher(mode="teleport")
        with pytest.raises(ConfigError):
            EntranceLauncher(offset=-1.0)
        with pytest.raises(ConfigError):
            launch_entrance_batch(TransformedSpec(kbm, "recurrent", 0.0), EntranceLauncher(), StopRule(horizon=0.1), 1e-3, 0, [0])

    def test_exact_launch_stays_above(self, kbm):
        spec_t = TransformedSpec(kbm, "bessel_high", 0.0)
        paths = launch_entrance_batch(spec_t, EntranceLauncher(), StopRule(horizon=0.5), 1e-3, 4, range(50))
        for p in paths:
            assert p.values[0] == 0.0
            assert np.all(p.values >= 0.0)
        assert any(p.killed for p in paths)

    def test_offset_launch_starts_off_the_level(self, kbm):
        spec_t = TransformedSpec(kbm, "bessel_low", 0.0)
        paths = launch_entrance_batch(spec_t, EntranceLauncher(mode="offset", offset=0.1), StopRule(horizon=0.2), 1e-3, 4, range(10))
        for p in paths:
            assert p.values[0] == pytest.approx(-0.1)
            assert np.all(p.values <= 0.0)


class TestIdentityChecks:
    def test_semigroup(self, kbm):
        check = semigroup_identity_check(kbm, 0.0, "high", 0.5, 0.2, lambda x: x, 1000, 1e-3, 5)
        assert check.bessel.n == check.weighted.n == 1000
        assert abs(check.difference) <= 4 * check.combined_stderr + 0.01

    def test_last_passage_sample(self, kbm):
        times, censored = last_passage_sample(kbm, 0.0, "high", 0.5, 3.0, 1e-3, 6, range(100))
        assert len(times) == 100
        assert censored <= 5
        assert np.all(times[np.isfinite(times)] >= 0.0)

    def test_conditioned_exit_sample(self, kbm):
        times, censored = conditioned_exit_sample(kbm, 0.0, "high", 0.5, 5.0, 1e-3, 6, range(100))
        assert censored <= 5
        assert np.all((times > 0.0) & (times <= 5.0))

    @pytest.mark.parametrize("options", [{}, {"bridge_correction": True}, {"bridge_correction": False}])
    def test_reversal_samples_share_crossing_correction(self, kbm, monkeypatch, options):
        seen = []
        for name in ("launch_entrance_batch", "simulate_batch"):
            monkeypatch.setattr(identity_checks, name, _recording(seen, getattr(identity_checks, name)))
        last_passage_sample(kbm, 0.0, "high", 0.5, 0.1, 1e-2, 6, range(5), **options)
        conditioned_exit_sample(kbm, 0.0, "high", 0.5, 0.1, 1e-2, 6, range(5, 10), **options)
        expected = options.get("bridge_correction", True)
        assert seen == [expected, expected]


def _recording(seen: list, real):
    def wrapper(*args, **kwargs):
        seen.append(kwargs["bridge_correction"])
        return real(*args, **kwargs)

    return wrapper
