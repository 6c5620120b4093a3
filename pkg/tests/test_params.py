"""Tests for time-dependent coefficients and their masses."""

from __future__ import annotations

import math

import numpy as np
import pytest

from wavebreak.errors import DivergentMassError, ParameterError
from wavebreak.params import ParamFn, ParamSet, sign_check


class TestParamFn:
    """Tests for ParamFn."""

    def test_constant(self) -> None:
        """A constant evaluates to itself and is nonnegative when >= 0."""
        p = ParamFn.constant(2.5)
        assert p(0.0) == 2.5
        assert p(100.0) == 2.5
        assert p.nonnegative

    def test_damped_exp(self) -> None:
        """damped_exp(s, λ) is s·exp(-2λt)."""
        p = ParamFn.damped_exp(3.0, 0.25)
        assert p(2.0) == pytest.approx(3.0 * math.exp(-1.0), rel=1e-15)

    def test_damped_exp_needs_positive_rate(self) -> None:
        """λ <= 0 is refused."""
        with pytest.raises(ParameterError):
            ParamFn.damped_exp(1.0, 0.0)

    def test_tabulated_holds_last_value(self) -> None:
        """Tables interpolate linearly and extrapolate flat."""
        p = ParamFn.tabulated([0.0, 1.0, 2.0], [0.0, 2.0, 1.0])
        assert p(0.5) == pytest.approx(1.0)
        assert p(1.5) == pytest.approx(1.5)
        assert p(10.0) == 1.0

    def test_tabulated_validation(self) -> None:
        """Tables must start at zero and increase."""
        with pytest.raises(ParameterError):
            ParamFn.tabulated([0.5, 1.0], [1.0, 1.0])
        with pytest.raises(ParameterError):
            ParamFn.tabulated([0.0, 1.0, 1.0], [1.0, 1.0, 1.0])
        with pytest.raises(ParameterError):
            ParamFn.tabulated([0.0, 1.0], [1.0, math.nan])

    def test_negative_time(self) -> None:
        """Coefficients are undefined before t = 0."""
        with pytest.raises(ParameterError):
            ParamFn.constant(1.0)(-0.1)

    def test_sample_matches_evaluate(self) -> None:
        """Vectorized sampling agrees with scalar evaluation."""
        p = ParamFn.damped_exp(-1.5, 0.7)
        ts = np.linspace(0.0, 3.0, 11)
        np.testing.assert_allclose(p.sample(ts), [p(float(t)) for t in ts], rtol=1e-15)


class TestL1Mass:
    """Tests for ParamFn.l1_mass."""

    def test_constant_finite(self) -> None:
        """|c|·T on a finite horizon."""
        assert ParamFn.constant(-2.0).l1_mass(3.0) == 6.0

    def test_constant_infinite_diverges(self) -> None:
        """A nonzero constant has no finite mass on [0, ∞)."""
        with pytest.raises(DivergentMassError):
            ParamFn.constant(1.0).l1_mass()
        assert ParamFn.zero().l1_mass() == 0.0

    def test_damped_exp_closed_form(self) -> None:
        """|s|(1 - e^{-2λT})/(2λ) and |s|/(2λ) as T → ∞."""
        p = ParamFn.damped_exp(-2.0, 0.5)
        assert p.l1_mass(1.5) == pytest.approx(2.0 * (1.0 - math.exp(-1.5)), rel=1e-12)
        assert p.l1_mass() == pytest.approx(2.0, rel=1e-15)

    def test_triangle_pulse(self) -> None:
        """A unit triangle on [0, 2] has area 1."""
        p = ParamFn.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
        assert p.l1_mass() == pytest.approx(1.0, abs=1e-10)

    def test_tabulated_sign_change(self) -> None:
        """Mass integrates the absolute value across a sign change."""
        p = ParamFn.tabulated([0.0, 1.0, 2.0], [1.0, -1.0, -1.0])
        assert p.l1_mass(2.0) == pytest.approx(0.5 + 1.0, abs=1e-10)

    def test_tabulated_zero_past_table(self) -> None:
        """Past the table the coefficient counts as zero mass."""
        p = ParamFn.tabulated([0.0, 1.0], [1.0, 1.0])
        assert p.l1_mass(5.0) == pytest.approx(1.0, abs=1e-10)

    def test_negative_horizon(self) -> None:
        """Horizons must be >= 0."""
        with pytest.raises(ParameterError):
            ParamFn.constant(1.0).l1_mass(-1.0)


class TestParamSet:
    """Tests for ParamSet presets and queries."""

    def test_b_family(self) -> None:
        """α = ξ = 1, β = b, γ = κ."""
        ps = ParamSet.b_family(2.0, 0.5)
        assert tuple(ps.coefficients(3.0)) == (1.0, 2.0, 0.5, 1.0)
        assert ps.b == 2.0
        assert ps.kappa == 0.5

    def test_damped_preset_proportional(self) -> None:
        """β = bα, γ = κα, ξ = α at every sample."""
        ps = ParamSet.damped(2.0, -0.5, 0.4)
        ts = np.linspace(0.0, 10.0, 41)
        a = ps.alpha.sample(ts)
        np.testing.assert_allclose(ps.beta.sample(ts), 2.0 * a, atol=1e-14)
        np.testing.assert_allclose(ps.gamma.sample(ts), -0.5 * a, atol=1e-14)
        np.testing.assert_allclose(ps.xi.sample(ts), a, atol=1e-14)

    def test_damped_preset_decays_like_exp_minus_lambda_t(self) -> None:
        """The weighted coefficients are e^{-λt}."""
        ps = ParamSet.damped(2.0, 1.0, 0.5)
        assert ps.alpha(2.0) == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_damped_preset_mass(self) -> None:
        """Each unit coefficient contributes 1/λ to the mass on [0, ∞)."""
        ps = ParamSet.damped(2.0, 1.0, 0.5)
        assert ps.mass() == pytest.approx((1.0 + 2.0 + 1.0 + 1.0) / 0.5, rel=1e-14)
        assert ps.mass(which=("alpha", "gamma", "xi")) == pytest.approx(3.0 / 0.5, rel=1e-14)

    def test_damped_needs_lambda(self) -> None:
        """λ <= 0 is refused."""
        with pytest.raises(ParameterError):
            ParamSet.damped(2.0, 1.0, 0.0)

    def test_constant_mass_diverges(self) -> None:
        """The undamped b-family has infinite mass."""
        with pytest.raises(DivergentMassError):
            ParamSet.b_family(2.0, 1.0).mass()

    def test_mass_finite_horizon(self) -> None:
        """Finite horizons sum the selected masses."""
        ps = ParamSet.constant(1.0, -3.0, 0.5, 2.0)
        assert ps.mass(2.0) == pytest.approx(13.0)
        assert ps.mass(2.0, which=("alpha", "xi")) == pytest.approx(6.0)

    def test_scaled(self) -> None:
        """Scaling multiplies all four coefficients."""
        ps = ParamSet.damped(2.0, 1.0, 0.5).scaled(0.1)
        assert ps.beta(0.0) == pytest.approx(0.2)
        assert ps.mass() == pytest.approx(0.1 * 10.0)

    def test_reduced(self) -> None:
        """β ≡ 3α is recognized and required where needed."""
        assert ParamSet.b_family(3.0, 1.0).is_reduced()
        assert not ParamSet.b_family(2.0, 1.0).is_reduced()
        with pytest.raises(ParameterError):
            ParamSet.b_family(2.0, 1.0).require_reduced()

    def test_negative_damping(self) -> None:
        """Damping must be >= 0."""
        with pytest.raises(ParameterError):
            ParamSet.b_family(2.0, 1.0, damping=-0.1)


class TestSignCheck:
    """Tests for sign_check."""

    def test_holds(self) -> None:
        """ξ >= 0 and α + γ + ξ >= 0 for the b-family with κ = 1."""
        verdict = sign_check(ParamSet.b_family(3.0, 1.0), 5.0, 11)
        assert verdict
        assert verdict.first_violation is None

    def test_reports_first_violation(self) -> None:
        """A coefficient that turns negative is caught at the first failing sample."""
        xi = ParamFn.tabulated([0.0, 2.0], [1.0, -1.0])
        ps = ParamSet(ParamFn.constant(1.0), ParamFn.constant(3.0), ParamFn.zero(), xi)
        verdict = sign_check(ps, 2.0, 5)
        assert not verdict
        assert verdict.first_violation == pytest.approx(1.5)

    def test_total_sign(self) -> None:
        """A large negative γ breaks α + γ + ξ >= 0."""
        verdict = sign_check(ParamSet.b_family(3.0, -5.0), 1.0, 3)
        assert not verdict
        assert verdict.first_violation == 0.0

    @pytest.mark.parametrize(
        ("ps", "holds", "first_violation"),
        [
            (ParamSet.damped(2.0, 1.0, 0.5), True, None),
            (ParamSet.constant(-1.0, 0.0, 0.0, 0.0), False, 0.0),
            (ParamSet.constant(-1.0, 0.0, 0.5, 0.6), True, None),
        ],
    )
    def test_reference_cases(self, ps: ParamSet, holds: bool, first_violation: float | None) -> None:
        """Damped preset, a negative α alone, and a negative α offset by γ + ξ."""
        verdict = sign_check(ps, 10.0, 21)
        assert bool(verdict) is holds
        assert verdict.first_violation == first_violation

    def test_needs_two_samples(self) -> None:
        """At least two samples are required."""
        with pytest.raises(ParameterError):
            sign_check(ParamSet.zero(), 1.0, 1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
