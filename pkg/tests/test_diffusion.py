import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.special import ndtr

from ltbridge.common.errors import ConfigError, DomainError, InvalidSpecError, InversionError, NotTransientError
from ltbridge.diffusion import (
    bessel3,
    builtin,
    build_scale,
    classify_boundary,
    conditional_terminal_lt_law,
    custom,
    diffusion_local_time,
    hitting_prob,
    killed_bm,
    ou,
    potential_density,
    recurrent_scale,
    rho,
    side_scale,
    sq_bessel,
    speed_density,
    speed_measure,
    terminal_lt_rate,
)
from ltbridge.diffusion.build_scale import compare_with_closed_form
from ltbridge.diffusion.potential import MixedLaw, exit_conditioned_lt_tail
from ltbridge.diffusion.spec_file import load_spec_file, parse_spec


class TestBuiltins:
    def test_killed_bm_scale_is_linear(self, kbm):
        assert kbm.case == "right_finite"
        assert kbm.value(0.5) == pytest.approx(0.5)
        assert kbm.derivative(-3.0) == pytest.approx(1.0)
        assert kbm.invert(0.25) == pytest.approx(0.25)

    def test_ou_scale_is_normal_cdf(self, ou_scale):
        assert ou_scale.case == "both_finite"
        assert ou_scale.value(0.0) == pytest.approx(0.5)
        assert ou_scale.value(0.3) == pytest.approx(ndtr(math.sqrt(2.0) * 0.3))

    def test_sq_bessel_scale(self, sqb):
        assert sqb.value(1.0) == pytest.approx(0.0, abs=1e-15)
        assert sqb.value(2.0) == pytest.approx(0.5)
        assert sqb.case == "right_finite"

    def test_low_dimension_sq_bessel(self):
        scale = build_scale(sq_bessel(1.0))
        assert scale.case == "left_finite"
        assert scale.value(4.0) == pytest.approx(2.0)
        assert rho(scale, 4.0) == 0.0

    @pytest.mark.parametrize(
        "fixture, lo, hi", [("kbm", -5.0, 1.0), ("ou_scale", -3.0, 3.0), ("sqb", 0.01, 20.0), ("bes3", 0.01, 20.0)]
    )
    def test_strictly_increasing_on_random_grid(self, request, fixture, lo, hi):
        scale = request.getfixturevalue(fixture)
        x = np.unique(np.random.default_rng(8).uniform(lo, hi, size=300))
        assert np.all(np.diff(scale.s(x)) > 0)

    def test_invert_outside_range(self, kbm):
        with pytest.raises(InversionError):
            kbm.invert(1.5)

    def test_recurrent_parameters_rejected(self):
        with pytest.raises(NotTransientError):
            ou(r_coef=-1.0)
        with pytest.raises(NotTransientError):
            sq_bessel(2.0)

    def test_bad_parameters(self):
        with pytest.raises(InvalidSpecError):
            killed_bm(0.0)
        with pytest.raises(InvalidSpecError):
            builtin("ou", sigma=2.0)
        with pytest.raises(InvalidSpecError):
            builtin("geometric")


class TestQuadratureScale:
    @pytest.mark.parametrize("spec", [killed_bm(1.0), ou(1.0, 0.0), ou(2.0, 1.0), sq_bessel(4.0)], ids=lambda s: s.name)
    def test_matches_closed_form(self, spec):
        assert compare_with_closed_form(spec, spec.probe_grid(200)) <= 1e-8

    def test_custom_ou_by_quadrature(self, ou_scale):
        scale = build_scale(custom(-math.inf, math.inf, "r_coef * x", "1", params={"r_coef": 1.0}))
        assert scale.source == "quadrature"
        assert scale.case == "both_finite"
        for x in (-1.0, 0.0, 0.4, 1.5):
            assert scale.value(x) == pytest.approx(ou_scale.value(x), abs=1e-5)

    def test_recurrent_custom_rejected(self):
        with pytest.raises(NotTransientError):
            build_scale(custom(-math.inf, math.inf, "0", "1"))

    def test_zero_sigma_rejected(self):
        with pytest.raises(InvalidSpecError):
            custom(0.0, 1.0, "0", "0 * x")

    def test_unknown_name_in_expression(self):
        with pytest.raises(InvalidSpecError):
            custom(0.0, 1.0, "os.system", "1")


class TestBoundaries:
    def test_killed_bm_end_is_regular(self, kbm):
        spec = replace(killed_bm(1.0), boundary_kinds=None)
        assert classify_boundary(spec, build_scale(spec), "right") == "regular"

    def test_bessel3_zero_is_entrance(self):
        spec = replace(bessel3(), boundary_kinds=None)
        assert classify_boundary(spec, build_scale(spec), "left") == "entrance"

    def test_sq_bessel_zero_is_entrance(self):
        spec = replace(sq_bessel(4.0), boundary_kinds=None)
        assert classify_boundary(spec, build_scale(spec), "left") == "entrance"

    def test_speed_density(self, kbm, sqb):
        assert speed_density(kbm.spec, kbm, 0.3) == pytest.approx(2.0)
        assert speed_density(sqb.spec, sqb, 1.0) == pytest.approx(0.5)

    def test_speed_measure_of_interval(self, kbm):
        assert speed_measure(kbm.spec, kbm, -1.0, 0.5) == pytest.approx(3.0)
        assert speed_measure(kbm.spec, kbm, 0.5, 0.5) == 0.0
        assert speed_measure(kbm.spec, kbm, 0.0, 5.0) == pytest.approx(2.0)


class TestPotential:
    def test_killed_bm_terminal_local_time(self, kbm):
        # mean 2b
        assert terminal_lt_rate(kbm, 0.0) == pytest.approx(0.5)
        assert rho(kbm, 0.0) == 1.0

    def test_diffusion_local_time_normalisation(self, kbm, ou_scale):
        assert diffusion_local_time(kbm, 0.0, 1.0) == pytest.approx(0.5)
        assert diffusion_local_time(ou_scale, 0.0, 2.0) == pytest.approx(1.0 / math.sqrt(math.pi))

    def test_sq_bessel_rate(self, sqb):
        assert terminal_lt_rate(sqb, 2.0) == pytest.approx(0.25)
        assert rho(sqb, 2.0) == 1.0

    def test_ou_rho_is_scale(self, ou_scale):
        assert rho(ou_scale, 0.3) == pytest.approx(ou_scale.value(0.3))
        assert potential_density(ou_scale, 0.0, 0.0) == pytest.approx(0.25)

    def test_hitting_prob(self, kbm, ou_scale):
        assert hitting_prob(kbm, -1.0, 0.0) == 1.0
        assert hitting_prob(kbm, 0.5, 0.0) == pytest.approx(0.5)
        assert hitting_prob(kbm, 0.5, 0.2) == pytest.approx(0.625)
        assert hitting_prob(kbm, 0.2, 0.5) == 1.0
        assert hitting_prob(ou_scale, 0.0, 0.0) == 1.0
        assert hitting_prob(ou_scale, -0.5, 0.0) == pytest.approx(ou_scale.value(-0.5) / 0.5)

    def test_potential_density_symmetric(self, ou_scale):
        assert potential_density(ou_scale, -0.3, 0.7) == pytest.approx(potential_density(ou_scale, 0.7, -0.3))

    @pytest.mark.parametrize(
        "fixture, pairs",
        [
            ("kbm", [(-1.0, 0.3), (0.5, 0.2), (0.2, 0.5), (0.9, -2.0)]),
            ("ou_scale", [(-0.5, 0.7), (0.7, -0.5), (0.1, 0.1)]),
            ("sqb", [(1.0, 3.0), (3.0, 1.0), (0.5, 2.0)]),
        ],
    )
    def test_potential_factorizes_through_hitting_prob(self, request, fixture, pairs):
        scale = request.getfixturevalue(fixture)
        for x, y in pairs:
            assert potential_density(scale, x, y) == pytest.approx(hitting_prob(scale, x, y) * potential_density(scale, y, y))

    def test_outside_state_space(self, kbm):
        with pytest.raises(DomainError):
            potential_density(kbm, 1.5, 0.0)

    def test_conditional_law_at_level(self, kbm):
        law = conditional_terminal_lt_law(kbm, 0.0, 0.0, 0.7)
        assert law.atom_mass == pytest.approx(0.0)
        assert float(law.ppf(0.0)) == pytest.approx(0.7)
        assert law.total_mass() == pytest.approx(1.0)

    def test_conditional_law_away_from_level(self, kbm):
        law = conditional_terminal_lt_law(kbm, 0.8, 0.0, 1.0)
        assert law.atom_mass == pytest.approx(0.8)
        assert float(law.ppf(0.5)) == 1.0
        u = np.array([0.85, 0.9, 0.99])
        assert law.cdf(law.ppf(u)) == pytest.approx(u)

    def test_atom_from_hitting_prob(self, kbm):
        assert conditional_terminal_lt_law(kbm, 0.5, 0.2, 0.0).atom_mass == pytest.approx(0.375)

    def test_mixed_law_density_integrates_to_tail(self):
        law = MixedLaw(atom_location=0.0, atom_mass=0.3, rate=2.0)
        assert law.total_mass() == pytest.approx(1.0)

    def test_exit_conditioned_tail(self, ou_scale, kbm):
        assert exit_conditioned_lt_tail(ou_scale, 0.0, 0.0, 0.0) == pytest.approx(1.0)
        assert exit_conditioned_lt_tail(ou_scale, 0.5, 0.0, 0.0, "right") < 1.0
        with pytest.raises(ConfigError):
            exit_conditioned_lt_tail(kbm, 0.0, 0.0, 1.0)

    def test_recurrent_scale_increasing(self, ou_scale):
        values = [recurrent_scale(ou_scale, 0.0, x) for x in (-1.0, -0.2, 0.0, 0.3, 1.0)]
        assert values[2] == pytest.approx(0.0)
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_side_scale_diverges_at_level(self, kbm):
        assert side_scale(kbm, 0.0, "high", 1e-6) < -1e5
        with pytest.raises(DomainError):
            side_scale(kbm, 0.0, "low", 0.5)


class TestSpecFile:
    def test_lenient_json(self):
        sf = parse_spec('{"model": "killed_bm", "params": {"b": 2,},}')
        spec = sf.to_spec()
        assert spec.name == "killed_bm"
        assert spec.right == 2.0

    def test_custom_requires_coefficients(self):
        with pytest.raises(InvalidSpecError):
            parse_spec('{"model": "custom", "l": 0, "r": 1}')

    def test_unknown_model(self):
        with pytest.raises(InvalidSpecError):
            parse_spec('{"model": "heston"}')

    def test_custom_with_infinite_end(self, spec_path):
        path = spec_path({"model": "custom", "l": 0, "r": math.inf, "drift": "3", "sigma": "2 * sqrt(x)", "anchor": 1})
        spec = load_spec_file(path).to_spec()
        assert spec.right == math.inf
        assert spec.anchor == 1.0

    def test_transform_entry(self, spec_path):
        sf = load_spec_file(spec_path({"model": "killed_bm", "transform": {"kind": "bessel_high", "y": 0}}))
        assert sf.transform.kind == "bessel_high"

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidSpecError):
            load_spec_file(tmp_path / "nope.json")
