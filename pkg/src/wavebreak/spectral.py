"""Periodic grid, fields and Fourier-multiplier operators.

All spectral work uses the real FFT. Coefficients are normalized so that

    f(x) = sum_k c_k exp(i k x),    c_k = rfft(f)[k] / n,

with the negative wavenumbers implied by conjugate symmetry. Under this
normalization Parseval reads ``sum(f**2) * dx == L * sum(w * |c|**2)`` where
``w`` is 1 at the mean and Nyquist slots and 2 elsewhere (:attr:`Grid.parseval_weights`).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from wavebreak.errors import GridError, NonFiniteFieldError, OutOfRangeError, ParameterError

__all__ = [
    "Field",
    "FieldHistory",
    "Grid",
    "dealiased_product",
    "derivative",
    "evaluate_at",
    "evaluate_with_slope",
    "green_convolve",
    "helmholtz_apply",
    "helmholtz_inverse",
]

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

_SHIFTS = (1.0, 4.0)


def _readonly(arr: NDArray[np.generic]) -> NDArray[np.generic]:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the torus [0, length).

    Attributes:
        n_points: Number of samples, a power of two no smaller than 16.
        length: Period L of the domain. The default 2π gives integer wavenumbers.
    """

    n_points: int
    length: float = 2.0 * math.pi

    def __post_init__(self) -> None:
        n = self.n_points
        if isinstance(n, bool) or not isinstance(n, int | np.integer):
            raise GridError(f"n_points must be an integer, got {n!r}")
        if n < 16 or n & (n - 1):
            raise GridError(f"n_points must be a power of two >= 16, got {n}")
        if not math.isfinite(self.length) or self.length <= 0.0:
            raise GridError(f"length must be positive and finite, got {self.length}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        """Grid spacing L / n."""
        return self.length / self.n_points

    @property
    def nyquist(self) -> int:
        """Index of the Nyquist slot in the real spectrum."""
        return self.n_points // 2

    @cached_property
    def x(self) -> FloatArray:
        """Sample positions."""
        return _readonly(np.arange(self.n_points, dtype=np.float64) * self.dx)  # type: ignore[return-value]

    @cached_property
    def index(self) -> NDArray[np.int64]:
        """Integer wavenumber indices 0 .. n/2 of the real spectrum."""
        return _readonly(np.arange(self.nyquist + 1, dtype=np.int64))  # type: ignore[return-value]

    @cached_property
    def k(self) -> FloatArray:
        """Physical wavenumbers 2π j / L."""
        return _readonly(self.index * (2.0 * math.pi / self.length))  # type: ignore[return-value]

    @cached_property
    def parseval_weights(self) -> FloatArray:
        w = np.full(self.nyquist + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return _readonly(w)  # type: ignore[return-value]

    @cached_property
    def dealias_mask(self) -> NDArray[np.bool_]:
        """Modes kept by the 2/3 rule."""
        return _readonly(self.index <= self.n_points // 3)  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a periodic function on a :class:`Grid`.

    The sample array is copied on construction and made read-only, so fields can be
    shared freely between threads and processes. Non-finite samples are rejected with
    :class:`~wavebreak.errors.NonFiniteFieldError`.
    """

    grid: Grid
    values: FloatArray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64)
        if arr.shape != (self.grid.n_points,):
            raise GridError(f"expected {self.grid.n_points} samples, got shape {arr.shape}")
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        if bad:
            raise NonFiniteFieldError(bad)
        object.__setattr__(self, "values", _readonly(arr))

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        return cls(grid, np.zeros(grid.n_points))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> Field:
        return cls(grid, np.full(grid.n_points, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[FloatArray], ArrayLike]) -> Field:
        """Sample ``fn`` at the grid points."""
        return cls(grid, np.broadcast_to(np.asarray(fn(grid.x), dtype=np.float64), (grid.n_points,)))

    @classmethod
    def from_spectrum(cls, grid: Grid, coeffs: ComplexArray) -> Field:
        """Inverse of :meth:`spectrum`."""
        return cls(grid, np.fft.irfft(np.asarray(coeffs) * grid.n_points, n=grid.n_points))

    # -- analysis -----------------------------------------------------------

    def spectrum(self) -> ComplexArray:
        """Normalized real-FFT coefficients c_0 .. c_{n/2}."""
        return np.fft.rfft(self.values) / self.grid.n_points

    def l2_norm(self) -> float:
        """Discrete L2 norm (sum v^2 dx)^(1/2)."""
        return float(np.sqrt(np.sum(self.values**2) * self.grid.dx))

    def linf_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def spectral_energy(self) -> float:
        """L * sum w |c|^2, equal to the squared discrete L2 norm by Parseval."""
        c = self.spectrum()
        return float(self.grid.length * np.sum(self.grid.parseval_weights * np.abs(c) ** 2))

    def at(self, points: ArrayLike) -> FloatArray:
        """Trigonometric interpolation at arbitrary positions."""
        return evaluate_at(self, points)

    def shifted(self, cells: int) -> Field:
        """Translate by a whole number of grid cells."""
        return Field(self.grid, np.roll(self.values, cells))

    # -- linear algebra -----------------------------------------------------

    def _other(self, other: Field) -> FloatArray:
        if other.grid != self.grid:
            raise GridError("fields live on different grids")
        return other.values

    def __add__(self, other: Field) -> Field:
        return Field(self.grid, self.values + self._other(other))

    def __sub__(self, other: Field) -> Field:
        return Field(self.grid, self.values - self._other(other))

    def __mul__(self, scalar: float) -> Field:
        return Field(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> Field:
        return Field(self.grid, self.values / float(scalar))

    def __neg__(self) -> Field:
        return Field(self.grid, -self.values)


def _check_shift(shift: float) -> float:
    if float(shift) not in _SHIFTS:
        raise ParameterError(f"Helmholtz shift must be one of {_SHIFTS}, got {shift}")
    return float(shift)


def derivative(f: Field) -> Field:
    """Spectral first derivative; the Nyquist mode is dropped."""
    c = f.spectrum() * (1j * f.grid.k)
    c[f.grid.nyquist] = 0.0
    return Field.from_spectrum(f.grid, c)


def helmholtz_inverse(f: Field, shift: float) -> Field:
    """Apply (shift - d^2/dx^2)^(-1) for shift in {1, 4}."""
    a = _check_shift(shift)
    return Field.from_spectrum(f.grid, f.spectrum() / (a + f.grid.k**2))


def helmholtz_apply(f: Field, shift: float) -> Field:
    """Apply (shift - d^2/dx^2) for shift in {1, 4}."""
    a = _check_shift(shift)
    return Field.from_spectrum(f.grid, f.spectrum() * (a + f.grid.k**2))


def green_convolve(f: Field) -> Field:
    """Periodic convolution with the kernel p(x) = exp(-|x|)/2, as a Fourier multiplier."""
    return helmholtz_inverse(f, 1.0)


def _dealiased(f: Field) -> FloatArray:
    c = f.spectrum()
    c[~f.grid.dealias_mask] = 0.0
    return np.fft.irfft(c * f.grid.n_points, n=f.grid.n_points)


def dealiased_product(f: Field, g: Field) -> Field:
    """Pointwise product of 2/3-rule truncated inputs."""
    if f.grid != g.grid:
        raise GridError("dealiased_product operands live on different grids")
    return Field(f.grid, _dealiased(f) * _dealiased(g))


def interpolation_matrix(grid: Grid, points: ArrayLike, *, order: int = 0) -> ComplexArray:
    """Matrix E with ``Re(E @ c)`` the interpolant (or its derivative) at ``points``.

    Args:
        grid: Grid the coefficients belong to.
        points: Evaluation positions, any real values.
        order: 0 for values, 1 for first derivative.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=np.float64))
    mult: ComplexArray = grid.parseval_weights.astype(np.complex128)
    if order == 1:
        mult = mult * (1j * grid.k)
        mult[grid.nyquist] = 0.0
    elif order != 0:
        raise ValueError(f"order must be 0 or 1, got {order}")
    return np.exp(1j * np.outer(pts, grid.k)) * mult


def evaluate_at(f: Field, points: ArrayLike, *, order: int = 0) -> FloatArray:
    """Evaluate the trigonometric interpolant of ``f`` (or its derivative) at ``points``."""
    return np.real(interpolation_matrix(f.grid, points, order=order) @ f.spectrum())


def evaluate_with_slope(f: Field, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """Interpolated values and first derivative of ``f`` at ``points``, sharing one exponential table."""
    grid = f.grid
    pts = np.atleast_1d(np.asarray(points, dtype=np.float64))
    c = f.spectrum() * grid.parseval_weights
    dc = c * (1j * grid.k)
    dc[grid.nyquist] = 0.0
    table = np.exp(1j * np.outer(pts, grid.k))
    return np.real(table @ c), np.real(table @ dc)


@dataclass(frozen=True, eq=False)
class FieldHistory:
    """Samples of one field at increasing times, linearly interpolated in between.

    Attributes:
        grid: Spatial grid shared by all samples.
        times: Strictly increasing sample times, shape (K,).
        values: Field samples, shape (K, n_points).
    """

    grid: Grid
    times: FloatArray
    values: FloatArray

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=np.float64)
        values = np.array(self.values, dtype=np.float64)
        if times.ndim != 1 or times.size == 0:
            raise OutOfRangeError("a field history needs at least one time")
        if values.shape != (times.size, self.grid.n_points):
            raise GridError(f"values shape {values.shape} does not match {times.size} x {self.grid.n_points}")
        if np.any(np.diff(times) <= 0.0):
            raise OutOfRangeError("field history times must be strictly increasing")
        bad = int(np.count_nonzero(~np.isfinite(values)))
        if bad:
            raise NonFiniteFieldError(bad, "field history")
        object.__setattr__(self, "times", _readonly(times))
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def from_fields(cls, times: Sequence[float] | FloatArray, fields: Sequence[Field]) -> FieldHistory:
        if not fields:
            raise OutOfRangeError("a field history needs at least one field")
        grid = fields[0].grid
        if any(f.grid != grid for f in fields):
            raise GridError("fields in a history must share one grid")
        return cls(grid, np.asarray(times, dtype=np.float64), np.stack([f.values for f in fields]))

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def field(self, i: int) -> Field:
        return Field(self.grid, self.values[i])

    def values_at(self, t: float) -> FloatArray:
        """Linear interpolation in time of the raw samples."""
        times = self.times
        tol = 1e-12 * max(1.0, abs(self.t_end))
        if t < times[0] - tol or t > times[-1] + tol:
            raise OutOfRangeError(f"time {t} outside stored range [{times[0]}, {times[-1]}]")
        if times.size == 1:
            return np.array(self.values[0])
        t = min(max(t, float(times[0])), float(times[-1]))
        j = int(np.searchsorted(times, t, side="right")) - 1
        j = min(max(j, 0), times.size - 2)
        w = (t - times[j]) / (times[j + 1] - times[j])
        if w == 0.0:
            return np.array(self.values[j])
        if w == 1.0:
            return np.array(self.values[j + 1])
        return (1.0 - w) * self.values[j] + w * self.values[j + 1]

    def at(self, t: float) -> Field:
        return Field(self.grid, self.values_at(t))
