"""Named initial profiles on the periodic grid."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from wavebreak.errors import GridError, ParameterError
from wavebreak.spectral import Field, FloatArray, Grid

__all__ = [
    "constant",
    "gaussian_bump",
    "peakon_smooth",
    "random_band_limited",
    "sine",
    "tabulated",
]

# Periodic images summed for localized profiles; the neglected tails are below 1e-16.
_IMAGES = 8


def _distance_images(grid: Grid, center: float) -> FloatArray:
    """x - center - jL for j = -_IMAGES .. _IMAGES, shape (2 * _IMAGES + 1, n)."""
    shifts = grid.length * np.arange(-_IMAGES, _IMAGES + 1)
    return grid.x[None, :] - center - shifts[:, None]


def constant(grid: Grid, value: float) -> Field:
    return Field.constant(grid, value)


def gaussian_bump(grid: Grid, amplitude: float, width: float, center: float | None = None) -> Field:
    """Periodized ``amplitude * exp(-(x - center)² / (2 width²))``."""
    if not width > 0.0:
        raise ParameterError(f"width must be positive, got {width}")
    c = 0.5 * grid.length if center is None else center
    d = _distance_images(grid, c)
    return Field(grid, amplitude * np.sum(np.exp(-0.5 * (d / width) ** 2), axis=0))


def sine(grid: Grid, amplitude: float, wavenumber: int = 1) -> Field:
    """``amplitude * sin(2π wavenumber x / L)``."""
    if wavenumber < 1 or wavenumber > grid.nyquist - 1:
        raise ParameterError(f"wavenumber must lie in [1, {grid.nyquist - 1}], got {wavenumber}")
    return Field(grid, amplitude * np.sin(2.0 * math.pi * wavenumber * grid.x / grid.length))


def peakon_smooth(grid: Grid, amplitude: float, sharpness: float, center: float | None = None) -> Field:
    """Peakon ``amplitude * exp(-|x - center|)`` with the corner rounded at scale 1 / sharpness.

    The profile is ``amplitude * exp(ε - sqrt((x - center)² + ε²))`` with ε = 1 / sharpness,
    summed over periodic images; its maximum equals ``amplitude`` up to the image tails.
    """
    if not sharpness > 0.0:
        raise ParameterError(f"sharpness must be positive, got {sharpness}")
    eps = 1.0 / sharpness
    c = 0.5 * grid.length if center is None else center
    d = _distance_images(grid, c)
    return Field(grid, amplitude * np.sum(np.exp(eps - np.sqrt(d**2 + eps**2)), axis=0))


def tabulated(grid: Grid, samples: Sequence[float]) -> Field:
    """Equispaced samples over one period, resampled periodically when their count differs from the grid."""
    values = np.asarray(samples, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise GridError("tabulated data needs at least two samples")
    if values.size == grid.n_points:
        return Field(grid, values)
    xp = np.arange(values.size) * (grid.length / values.size)
    return Field(grid, np.interp(grid.x, xp, values, period=grid.length))


def random_band_limited(
    grid: Grid, rng: np.random.Generator, bandwidth: int, amplitude: float = 1.0, mean: float = 0.0
) -> Field:
    """Random real field whose spectrum is supported in 1 <= j <= bandwidth, decaying like (1 + j)^-2."""
    if not 1 <= bandwidth <= grid.n_points // 3:
        raise ParameterError(f"bandwidth must lie in [1, {grid.n_points // 3}], got {bandwidth}")
    coeffs = np.zeros(grid.nyquist + 1, dtype=np.complex128)
    j = np.arange(1, bandwidth + 1)
    coeffs[1 : bandwidth + 1] = (rng.standard_normal(bandwidth) + 1j * rng.standard_normal(bandwidth)) / (1.0 + j) ** 2
    coeffs *= amplitude
    coeffs[0] = mean
    return Field.from_spectrum(grid, coeffs)
