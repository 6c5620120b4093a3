"""Tests for the iterated linear transport scheme."""

from __future__ import annotations

import math

import numpy as np
import pytest

from wavebreak.dynamics import State, StateHistory
from wavebreak.errors import OutOfRangeError, ParameterError, TransportInstabilityError
from wavebreak.friedrichs import (
    CauchyDifferences,
    IterateRecord,
    cauchy_differences,
    distance_to_solution,
    iterate,
    lemma32_envelope,
    linear_transport_solve,
    transport_estimate_ratio,
)
from wavebreak.initial_data import gaussian_bump
from wavebreak.integrator import StepControl, simulate
from wavebreak.littlewood_paley import BesovSpec, low_pass
from wavebreak.params import ParamFn, ParamSet
from wavebreak.spectral import Field, FieldHistory, Grid
from wavebreak.theory import TheoryConfig, data_norm, h_modulus, lemma32_bound, theorem11_condition

SPEC = BesovSpec(s=2.0)


def _constant_history(f: Field, t_end: float) -> FieldHistory:
    return FieldHistory.from_fields([0.0, t_end], [f, f])


def _small_data(grid: Grid) -> tuple[Field, Field]:
    return gaussian_bump(grid, 0.02, 0.5), gaussian_bump(grid, 0.02, 0.5, center=2.0)


class TestLinearTransport:
    """Tests for linear_transport_solve."""

    def test_translation(self, grid64: Grid) -> None:
        """Unit advection translates the initial profile."""
        f0 = Field.from_function(grid64, lambda x: np.sin(x) + 0.5 * np.cos(2 * x))
        times = np.linspace(0.0, 1.0, 11)
        out = linear_transport_solve(
            _constant_history(Field.constant(grid64, 1.0), 1.0), ParamFn.constant(1.0), None, f0, 1.0,
            times=times, max_step=0.005,
        )
        np.testing.assert_allclose(out.times, times)
        x = grid64.x
        np.testing.assert_allclose(out.values[-1], np.sin(x - 1.0) + 0.5 * np.cos(2 * (x - 1.0)), atol=1e-8)

    def test_coefficient_scales_speed(self, grid64: Grid) -> None:
        """c(t) multiplies the advector."""
        f0 = Field.from_function(grid64, np.sin)
        out = linear_transport_solve(
            _constant_history(Field.constant(grid64, 2.0), 1.0), ParamFn.constant(0.25), None, f0, 1.0,
            times=[0.0, 1.0], max_step=0.005,
        )
        np.testing.assert_allclose(out.values[-1], np.sin(grid64.x - 0.5), atol=1e-8)

    def test_forcing(self, grid64: Grid) -> None:
        """A constant forcing without advection adds F·t."""
        f0 = Field.from_function(grid64, np.cos)
        out = linear_transport_solve(
            _constant_history(Field.zeros(grid64), 2.0), ParamFn.zero(),
            _constant_history(Field.constant(grid64, 0.5), 2.0), f0, 2.0, times=[0.0, 1.0, 2.0],
        )
        np.testing.assert_allclose(out.values[-1], np.cos(grid64.x) + 1.0, atol=1e-12)

    def test_times_must_start_at_zero(self, grid64: Grid) -> None:
        """Output times start at 0."""
        with pytest.raises(OutOfRangeError):
            linear_transport_solve(
                _constant_history(Field.zeros(grid64), 1.0), ParamFn.zero(), None, Field.zeros(grid64), 1.0,
                times=[0.5, 1.0],
            )

    def test_instability_reported(self, grid64: Grid) -> None:
        """An unstable step size ends in TransportInstabilityError."""
        f0 = Field.from_function(grid64, lambda x: np.cos(20 * x))
        with np.errstate(all="ignore"), pytest.raises(TransportInstabilityError):
            linear_transport_solve(
                _constant_history(Field.constant(grid64, 1.0), 1000.0), ParamFn.constant(1.0), None, f0, 1000.0,
                times=[0.0, 1000.0], cfl=50.0,
            )

    def test_estimate_ratio_translation(self, grid64: Grid) -> None:
        """Pure translation keeps the Besov norm, so the estimate ratio is 1."""
        f0 = Field.from_function(grid64, lambda x: np.sin(3 * x) + np.cos(9 * x))
        adv = _constant_history(Field.constant(grid64, 1.0), 1.0)
        out = linear_transport_solve(
            adv, ParamFn.constant(1.0), None, f0, 1.0, times=np.linspace(0, 1, 6), max_step=0.001
        )
        ratio = transport_estimate_ratio(out, adv, ParamFn.constant(1.0), None, SPEC)
        np.testing.assert_allclose(ratio, 1.0, atol=1e-8)

    def test_estimate_ratio_with_forcing(self, grid64: Grid) -> None:
        """With a forcing the triangle inequality keeps the ratio below 1."""
        f0 = Field.from_function(grid64, np.sin)
        adv = _constant_history(Field.zeros(grid64), 1.0)
        forcing = _constant_history(Field.constant(grid64, 1.0), 1.0)
        out = linear_transport_solve(adv, ParamFn.zero(), forcing, f0, 1.0, times=np.linspace(0, 1, 6))
        ratio = transport_estimate_ratio(out, adv, ParamFn.zero(), forcing, SPEC)
        assert np.all(ratio <= 1.0 + 1e-10)


class TestIterate:
    """Tests for iterate and its records."""

    def test_first_iterate_is_low_pass_data(self, grid64: Grid) -> None:
        """Iterate 1 is the time-independent S_1 projection of the data."""
        u0, sigma0 = _small_data(grid64)
        records = iterate(u0, sigma0, ParamSet.damped(2.0, 1.0, 10.0), SPEC, 0.5, 2, n_frames=10)
        first = records[0]
        assert first.n == 1
        assert len(first.times) == 11
        np.testing.assert_allclose(first.solution.u.values[-1], low_pass(u0, 1).values)
        np.testing.assert_allclose(first.H_series, first.H_series[0])
        assert [r.n for r in records] == [1, 2]

    def test_second_iterate_starts_from_s2(self, grid64: Grid) -> None:
        """Iterate n starts from S_n of the data."""
        u0, sigma0 = _small_data(grid64)
        records = iterate(u0, sigma0, ParamSet.damped(2.0, 1.0, 10.0), SPEC, 0.5, 2, n_frames=10)
        np.testing.assert_allclose(records[1].solution.u.values[0], low_pass(u0, 2).values, atol=1e-15)
        np.testing.assert_allclose(records[1].solution.sigma.values[0], low_pass(sigma0, 2).values, atol=1e-15)

    def test_validation(self, grid64: Grid) -> None:
        """Iteration counts, horizons and frame counts are checked."""
        u0, sigma0 = _small_data(grid64)
        ps = ParamSet.zero()
        with pytest.raises(ParameterError):
            iterate(u0, sigma0, ps, SPEC, 1.0, 0)
        with pytest.raises(ParameterError):
            iterate(u0, sigma0, ps, SPEC, 0.0, 2)
        with pytest.raises(ParameterError):
            iterate(u0, sigma0, ps, SPEC, 1.0, 2, n_frames=0)

    def test_non_finite_record(self, grid64: Grid) -> None:
        """A record with a non-finite norm names its iteration."""
        history = StateHistory.from_states([State.zeros(grid64)])
        with pytest.raises(TransportInstabilityError) as info:
            IterateRecord(4, history, np.array([math.nan]), SPEC)
        assert info.value.iteration == 4


class TestCauchyDifferences:
    """Tests for the difference series and their envelope."""

    def test_ratios_floor(self) -> None:
        """Ratios below the floor are NaN."""
        diffs = CauchyDifferences(
            1, np.array([1, 2, 3]), np.array([0.0, 1.0]), np.array([[1.0, 2.0], [0.5, 1.0], [0.0, 1e-13]])
        )
        np.testing.assert_allclose(diffs.sup, [2.0, 1.0, 1e-13])
        ratios = diffs.ratios()
        assert ratios[0] == pytest.approx(0.5)
        assert ratios[1] == pytest.approx(1e-13)
        assert np.isnan(diffs.ratios(floor=2.0)[1])

    def test_at(self) -> None:
        """at returns one row and refuses unknown n."""
        diffs = CauchyDifferences(1, np.array([1, 2]), np.array([0.0]), np.array([[1.0], [2.0]]))
        np.testing.assert_allclose(diffs.at(2), [2.0])
        with pytest.raises(OutOfRangeError):
            diffs.at(5)

    def test_needs_pairs(self, grid64: Grid) -> None:
        """A single record has no difference."""
        u0, sigma0 = _small_data(grid64)
        records = iterate(u0, sigma0, ParamSet.zero(), SPEC, 0.2, 1, n_frames=4)
        with pytest.raises(OutOfRangeError):
            cauchy_differences(records, 1)
        with pytest.raises(ParameterError):
            cauchy_differences(records, 0)

    def test_envelope_formula(self, grid64: Grid) -> None:
        """The envelope evaluates the recursive bound with the fitted constant."""
        u0, sigma0 = _small_data(grid64)
        ps = ParamSet.damped(2.0, 1.0, 10.0)
        records = iterate(u0, sigma0, ps, SPEC, 0.5, 4, n_frames=10)
        diffs = cauchy_differences(records, 1)
        np.testing.assert_array_equal(diffs.indices, [1, 2, 3])
        env = lemma32_envelope(diffs, ps, 0.5, c_hat=3.0)
        g0 = float(diffs.at(1).max())
        a = [3.0 * 2.0**-k for k in range(4)]
        expected = [lemma32_bound(a, ps.mass(0.5), g0, n - 1) for n in (1, 2, 3)]
        np.testing.assert_allclose(env, expected, rtol=1e-14)

    def test_envelope_default_fit(self) -> None:
        """Without a constant, a_1 matches the second difference and the envelope covers it."""
        diffs = CauchyDifferences(
            1, np.array([1, 2, 3]), np.array([0.0, 1.0]), np.array([[0.2, 0.8], [0.1, 0.3], [0.05, 0.1]])
        )
        ps = ParamSet.damped(2.0, 1.0, 10.0)
        env = lemma32_envelope(diffs, ps, 1.0)
        a = [0.6 * 2.0**-k for k in range(4)]
        expected = [lemma32_bound(a, ps.mass(1.0), 0.8, n - 1) for n in (1, 2, 3)]
        np.testing.assert_allclose(env, expected, rtol=1e-14)
        assert env[1] >= diffs.sup[1]

    def test_envelope_single_difference(self) -> None:
        """With only the first difference stored, the fit falls back to it."""
        diffs = CauchyDifferences(1, np.array([1]), np.array([0.0, 1.0]), np.array([[0.25, 0.5]]))
        ps = ParamSet.b_family(2.0, 1.0)
        env = lemma32_envelope(diffs, ps, 1.0)
        np.testing.assert_allclose(env, [lemma32_bound([1.0], ps.mass(1.0), 0.5, 0)], rtol=1e-14)


class TestConvergence:
    """Tests for the convergence of the scheme on small data."""

    @pytest.mark.slow
    def test_small_data_convergence(self) -> None:
        """Under the global-existence condition the iterates stay bounded, contract and approach the solution."""
        grid = Grid(128)
        u0, sigma0 = _small_data(grid)
        ps = ParamSet.damped(2.0, 1.0, 10.0)
        cfg = TheoryConfig()
        h0 = data_norm(u0, sigma0, SPEC)
        assert theorem11_condition(h0, ps, cfg).holds

        records = iterate(u0, sigma0, ps, SPEC, 1.0, 10, n_frames=200)
        uniform = 2.0 * h_modulus(h0, ps, cfg) * 1.1
        assert max(float(np.max(r.H_series)) for r in records) <= uniform

        diffs = cauchy_differences(records, 1)
        ratios = diffs.ratios()
        later = ratios[2:]
        assert np.all(later[np.isfinite(later)] <= 0.75)

        reference = simulate(State(u0, sigma0), ps, 1.0, StepControl(n_seeds=0))
        assert reference.verdict.completed
        allowance = 2.0 * float(diffs.sup[-1]) + 1e-4 * h0
        assert distance_to_solution(records[-1], reference) <= allowance


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
