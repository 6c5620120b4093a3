"""Tests for the periodic grid, fields and Fourier-multiplier operators."""

from __future__ import annotations

import math

import numpy as np
import pytest

from wavebreak.errors import GridError, NonFiniteFieldError, OutOfRangeError, ParameterError
from wavebreak.initial_data import random_band_limited
from wavebreak.spectral import (
    Field,
    FieldHistory,
    Grid,
    dealiased_product,
    derivative,
    evaluate_at,
    evaluate_with_slope,
    green_convolve,
    helmholtz_apply,
    helmholtz_inverse,
)


class TestGrid:
    """Tests for Grid."""

    def test_rejects_non_power_of_two(self) -> None:
        """Sizes that are not powers of two are refused."""
        with pytest.raises(GridError):
            Grid(48)

    def test_rejects_small(self) -> None:
        """Sizes below 16 are refused."""
        with pytest.raises(GridError):
            Grid(8)

    def test_rejects_bad_length(self) -> None:
        """Non-positive or infinite periods are refused."""
        with pytest.raises(GridError):
            Grid(16, 0.0)
        with pytest.raises(GridError):
            Grid(16, math.inf)

    def test_wavenumbers(self) -> None:
        """k = 2πj/L for j = 0..n/2."""
        grid = Grid(32, 4.0 * math.pi)
        assert grid.k.size == 17
        np.testing.assert_allclose(grid.k, 0.5 * np.arange(17))

    def test_dealias_mask_keeps_two_thirds(self) -> None:
        """The 2/3 rule keeps j <= n // 3."""
        grid = Grid(64)
        assert int(np.count_nonzero(grid.dealias_mask)) == 64 // 3 + 1

    def test_arrays_are_read_only(self) -> None:
        """Cached arrays cannot be mutated."""
        grid = Grid(16)
        with pytest.raises(ValueError):
            grid.x[0] = 1.0


class TestField:
    """Tests for Field."""

    def test_rejects_non_finite(self, grid64: Grid) -> None:
        """NaN samples raise NonFiniteFieldError with the count."""
        values = np.zeros(64)
        values[[3, 7]] = np.nan
        with pytest.raises(NonFiniteFieldError) as info:
            Field(grid64, values)
        assert info.value.count == 2

    def test_rejects_wrong_shape(self, grid64: Grid) -> None:
        """Sample count must match the grid."""
        with pytest.raises(GridError):
            Field(grid64, np.zeros(32))

    def test_values_copied_and_frozen(self, grid64: Grid) -> None:
        """The caller's array is copied and the stored one is read-only."""
        raw = np.ones(64)
        f = Field(grid64, raw)
        raw[0] = 5.0
        assert f.values[0] == 1.0
        with pytest.raises(ValueError):
            f.values[0] = 2.0

    def test_spectral_round_trip(self, grid128: Grid) -> None:
        """Physical to spectral to physical reproduces the samples."""
        rng = np.random.default_rng(0)
        f = Field(grid128, rng.standard_normal(128))
        g = Field.from_spectrum(grid128, f.spectrum())
        np.testing.assert_allclose(g.values, f.values, rtol=1e-12, atol=1e-12)

    def test_parseval(self, grid128: Grid) -> None:
        """Squared L2 norm equals the weighted spectral energy."""
        rng = np.random.default_rng(1)
        f = Field(grid128, rng.standard_normal(128))
        assert f.spectral_energy() == pytest.approx(f.l2_norm() ** 2, rel=1e-12)

    def test_sine_spectrum(self, grid64: Grid) -> None:
        """sin x has c_1 = -i/2 and nothing else."""
        c = Field.from_function(grid64, np.sin).spectrum()
        expected = np.zeros(33, dtype=complex)
        expected[1] = -0.5j
        np.testing.assert_allclose(c, expected, atol=1e-14)

    def test_grid_mismatch(self, grid64: Grid, grid128: Grid) -> None:
        """Arithmetic across grids raises GridError."""
        with pytest.raises(GridError):
            _ = Field.zeros(grid64) + Field.zeros(grid128)

    def test_shifted(self, grid64: Grid) -> None:
        """Shifting by whole cells rolls the samples."""
        f = Field.from_function(grid64, np.sin)
        np.testing.assert_allclose(f.shifted(16).values, np.sin(grid64.x - math.pi / 2), atol=1e-14)


class TestDerivative:
    """Tests for spectral differentiation."""

    def test_sine(self, grid64: Grid) -> None:
        """d/dx sin(3x) = 3 cos(3x)."""
        f = Field.from_function(grid64, lambda x: np.sin(3 * x))
        np.testing.assert_allclose(derivative(f).values, 3 * np.cos(3 * grid64.x), atol=1e-12)

    def test_constant(self, grid64: Grid) -> None:
        """The derivative of a constant vanishes."""
        np.testing.assert_allclose(derivative(Field.constant(grid64, 2.5)).values, 0.0, atol=1e-14)

    def test_nyquist_dropped(self, grid64: Grid) -> None:
        """The Nyquist mode has no derivative."""
        f = Field.from_function(grid64, lambda x: np.cos(32 * x))
        np.testing.assert_allclose(derivative(f).values, 0.0, atol=1e-12)

    def test_finite_difference_agreement(self) -> None:
        """Centered differences converge to the spectral derivative at second order."""
        errors = []
        for n in (64, 128, 256):
            grid = Grid(n)
            f = Field.from_function(grid, lambda x: np.exp(np.sin(x)))
            fd = (np.roll(f.values, -1) - np.roll(f.values, 1)) / (2 * grid.dx)
            errors.append(float(np.max(np.abs(fd - derivative(f).values))))
        assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.05)
        assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.05)


class TestHelmholtz:
    """Tests for the Helmholtz operators and the Green's convolution."""

    @pytest.mark.parametrize("shift", [1.0, 4.0])
    def test_inverse_then_apply(self, grid128: Grid, shift: float) -> None:
        """(shift - ∂²) undoes its inverse."""
        f = random_band_limited(grid128, np.random.default_rng(2), 40, mean=0.3)
        back = helmholtz_apply(helmholtz_inverse(f, shift), shift)
        np.testing.assert_allclose(back.values, f.values, atol=1e-10)

    def test_apply_then_inverse(self, grid128: Grid) -> None:
        """Applying then inverting with shift 4 recovers the input."""
        f = random_band_limited(grid128, np.random.default_rng(3), 40)
        back = helmholtz_inverse(helmholtz_apply(f, 4.0), 4.0)
        np.testing.assert_allclose(back.values, f.values, atol=1e-10)

    def test_commutes_with_derivative(self, grid128: Grid) -> None:
        """∂ and (1 - ∂²)^{-1} commute."""
        f = random_band_limited(grid128, np.random.default_rng(4), 40)
        a = derivative(helmholtz_inverse(f, 1.0))
        b = helmholtz_inverse(derivative(f), 1.0)
        np.testing.assert_allclose(a.values, b.values, atol=1e-10)

    def test_rejects_other_shift(self, grid64: Grid) -> None:
        """Only shifts 1 and 4 are supported."""
        with pytest.raises(ParameterError):
            helmholtz_inverse(Field.zeros(grid64), 2.0)

    def test_green_kernel_quadrature(self, grid128: Grid) -> None:
        """Convolution with exp(-|x|)/2 matches quadrature against the periodized kernel."""
        f = Field.from_function(grid128, lambda x: np.cos(x) + 0.5 * np.sin(2 * x))
        nodes, weights = np.polynomial.legendre.leggauss(80)
        # y = x + t with t in (0, 2π) keeps the kink of the kernel at the endpoints
        t = math.pi * (nodes + 1.0)
        w = math.pi * weights
        kernel = np.cosh(math.pi - t) / (2 * math.sinh(math.pi))

        x = grid128.x[::8]
        oracle = np.array(
            [np.sum(w * kernel * (np.cos(xi + t) + 0.5 * np.sin(2 * (xi + t)))) for xi in x]
        )
        np.testing.assert_allclose(green_convolve(f).values[::8], oracle, atol=1e-10)


class TestDealiasedProduct:
    """Tests for dealiased_product."""

    def test_resolved_square(self, grid64: Grid) -> None:
        """sin² x = (1 - cos 2x)/2 when fully resolved."""
        f = Field.from_function(grid64, np.sin)
        expected = 0.5 * (1.0 - np.cos(2.0 * grid64.x))
        np.testing.assert_allclose(dealiased_product(f, f).values, expected, atol=1e-12)

    def test_band_limited_matches_pointwise(self, grid128: Grid) -> None:
        """Inputs inside the kept band multiply exactly."""
        rng = np.random.default_rng(5)
        f = random_band_limited(grid128, rng, 42)
        g = random_band_limited(grid128, rng, 42)
        np.testing.assert_allclose(dealiased_product(f, g).values, f.values * g.values, atol=1e-12)

    def test_truncates_high_modes(self, grid64: Grid) -> None:
        """A mode above the 2/3 cutoff is removed before multiplying."""
        f = Field.from_function(grid64, lambda x: np.cos(30 * x))
        one = Field.constant(grid64, 1.0)
        np.testing.assert_allclose(dealiased_product(f, one).values, 0.0, atol=1e-12)


class TestEvaluation:
    """Tests for off-grid evaluation."""

    def test_interpolates_band_limited(self, grid64: Grid) -> None:
        """Interpolation of a resolved trigonometric polynomial is exact."""
        f = Field.from_function(grid64, lambda x: np.sin(x) + 0.25 * np.cos(5 * x))
        pts = np.array([0.1, 1.234, 5.9, -0.7, 7.0])
        np.testing.assert_allclose(evaluate_at(f, pts), np.sin(pts) + 0.25 * np.cos(5 * pts), atol=1e-12)

    def test_slope(self, grid64: Grid) -> None:
        """evaluate_with_slope returns values and derivatives."""
        f = Field.from_function(grid64, lambda x: np.sin(2 * x))
        pts = np.linspace(0.05, 6.0, 7)
        vals, slopes = evaluate_with_slope(f, pts)
        np.testing.assert_allclose(vals, np.sin(2 * pts), atol=1e-12)
        np.testing.assert_allclose(slopes, 2 * np.cos(2 * pts), atol=1e-12)
        np.testing.assert_allclose(evaluate_at(f, pts, order=1), slopes, atol=1e-12)


class TestFieldHistory:
    """Tests for FieldHistory."""

    def test_linear_interpolation(self, grid64: Grid) -> None:
        """Midway between samples is the average."""
        h = FieldHistory.from_fields([0.0, 1.0], [Field.zeros(grid64), Field.constant(grid64, 2.0)])
        np.testing.assert_allclose(h.at(0.25).values, 0.5)

    def test_out_of_range(self, grid64: Grid) -> None:
        """Times outside the stored range raise."""
        h = FieldHistory.from_fields([0.0, 1.0], [Field.zeros(grid64), Field.zeros(grid64)])
        with pytest.raises(OutOfRangeError):
            h.at(1.5)

    def test_rejects_unsorted_times(self, grid64: Grid) -> None:
        """Times must increase strictly."""
        with pytest.raises(OutOfRangeError):
            FieldHistory.from_fields([0.0, 0.0], [Field.zeros(grid64), Field.zeros(grid64)])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
