"""Time-dependent coefficients α, β, γ, ξ and their L1 masses."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field, replace
from typing import Literal, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from wavebreak.errors import DivergentMassError, ParameterError

__all__ = [
    "COEFFICIENT_NAMES",
    "Coefficients",
    "ParamFn",
    "ParamSet",
    "SignVerdict",
    "sign_check",
]

ParamKind = Literal["constant", "damped_exp", "tabulated"]
CoefficientName = Literal["alpha", "beta", "gamma", "xi"]
COEFFICIENT_NAMES: tuple[CoefficientName, ...] = ("alpha", "beta", "gamma", "xi")

_SIGN_TOLERANCE = 1e-14
_TABLE_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class ParamFn:
    """One time-dependent coefficient.

    Use the :meth:`constant`, :meth:`damped_exp` and :meth:`tabulated` constructors.

    Attributes:
        kind: Functional form.
        value: Value of a constant coefficient.
        scale: Prefactor s of ``s * exp(-2 λ t)``.
        rate: λ of ``s * exp(-2 λ t)``.
        times: Table abscissae (strictly increasing, starting at 0).
        values: Table ordinates, linearly interpolated.
        nonnegative: Certified nonnegative for every t >= 0.
    """

    kind: ParamKind
    value: float = 0.0
    scale: float = 0.0
    rate: float = 0.0
    times: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    values: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    nonnegative: bool = False

    def __post_init__(self) -> None:
        if self.kind == "constant":
            if not math.isfinite(self.value):
                raise ParameterError(f"constant coefficient must be finite, got {self.value}")
        elif self.kind == "damped_exp":
            if not math.isfinite(self.scale):
                raise ParameterError(f"damped_exp scale must be finite, got {self.scale}")
            if not (math.isfinite(self.rate) and self.rate > 0.0):
                raise ParameterError(f"damped_exp requires λ > 0, got {self.rate}")
        elif self.kind == "tabulated":
            times = np.array(self.times, dtype=np.float64)
            values = np.array(self.values, dtype=np.float64)
            if times.ndim != 1 or times.size < 2 or times.shape != values.shape:
                raise ParameterError("tabulated coefficient needs matching time and value arrays of length >= 2")
            if times[0] != 0.0:
                raise ParameterError(f"tabulated time grid must start at 0, got {times[0]}")
            if np.any(np.diff(times) <= 0.0):
                raise ParameterError("tabulated time grid must be strictly increasing")
            if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
                raise ParameterError("tabulated coefficient must be finite")
            times.setflags(write=False)
            values.setflags(write=False)
            object.__setattr__(self, "times", times)
            object.__setattr__(self, "values", values)
        else:
            raise ParameterError(f"unknown coefficient kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float) -> ParamFn:
        return cls("constant", value=float(value), nonnegative=value >= 0.0)

    @classmethod
    def damped_exp(cls, scale: float, lam: float) -> ParamFn:
        """``scale * exp(-2 lam t)``."""
        return cls("damped_exp", scale=float(scale), rate=float(lam), nonnegative=scale >= 0.0)

    @classmethod
    def tabulated(cls, times: ArrayLike, values: ArrayLike) -> ParamFn:
        vals = np.asarray(values, dtype=np.float64)
        times_arr = np.asarray(times, dtype=np.float64)
        return cls("tabulated", times=times_arr, values=vals, nonnegative=bool(np.all(vals >= 0.0)))

    @classmethod
    def zero(cls) -> ParamFn:
        return cls.constant(0.0)

    @property
    def table_end(self) -> float:
        """Last tabulated time, or infinity for closed-form kinds."""
        return float(self.times[-1]) if self.kind == "tabulated" else math.inf

    def evaluate(self, t: float) -> float:
        """Coefficient value at time ``t >= 0``.

        Tabulated coefficients hold their last value past the end of the table.
        """
        if not t >= 0.0:
            raise ParameterError(f"coefficients are defined for t >= 0, got {t}")
        if self.kind == "constant":
            return self.value
        if self.kind == "damped_exp":
            return self.scale * math.exp(-2.0 * self.rate * t)
        return float(np.interp(t, self.times, self.values))

    def sample(self, ts: ArrayLike) -> NDArray[np.float64]:
        """Vectorized :meth:`evaluate`."""
        arr = np.asarray(ts, dtype=np.float64)
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ParameterError("coefficients are defined for finite t >= 0")
        if self.kind == "constant":
            return np.full(arr.shape, self.value)
        if self.kind == "damped_exp":
            return self.scale * np.exp(-2.0 * self.rate * arr)
        return np.interp(arr, self.times, self.values)

    __call__ = evaluate

    def l1_mass(self, t_end: float = math.inf) -> float:
        """∫_0^t_end |p(t)| dt.

        Closed form for constant and damped_exp. Tabulated coefficients are integrated
        adaptively over their table and count as zero past its end.

        Raises:
            DivergentMassError: infinite horizon with a nonzero constant.
        """
        if not t_end >= 0.0:
            raise ParameterError(f"mass horizon must be >= 0, got {t_end}")
        if self.kind == "constant":
            if math.isinf(t_end):
                if self.value != 0.0:
                    raise DivergentMassError(f"constant coefficient {self.value} has infinite mass on [0, inf)")
                return 0.0
            return abs(self.value) * t_end
        if self.kind == "damped_exp":
            two_lam = 2.0 * self.rate
            if math.isinf(t_end):
                return abs(self.scale) / two_lam
            return abs(self.scale) * -math.expm1(-two_lam * t_end) / two_lam
        upper = min(t_end, self.table_end)
        if upper == 0.0:
            return 0.0
        breaks = [float(t) for t in self.times[1:-1] if t < upper]
        mass, _err = integrate.quad(
            lambda t: abs(float(np.interp(t, self.times, self.values))),
            0.0,
            upper,
            points=breaks or None,
            epsabs=_TABLE_ATOL,
            epsrel=1e-12,
            limit=max(100, 4 * len(self.times)),
        )
        return float(mass)

    def scaled(self, theta: float) -> ParamFn:
        """Pointwise multiple ``theta * p``."""
        if self.kind == "constant":
            return ParamFn.constant(theta * self.value)
        if self.kind == "damped_exp":
            return ParamFn.damped_exp(theta * self.scale, self.rate)
        return ParamFn.tabulated(self.times, theta * self.values)

    def describe(self) -> dict[str, object]:
        """Plain-data description for summaries."""
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "damped_exp":
            return {"kind": "damped_exp", "scale": self.scale, "rate": self.rate}
        return {"kind": "tabulated", "times": self.times.tolist(), "values": self.values.tolist()}


class Coefficients(NamedTuple):
    alpha: float
    beta: float
    gamma: float
    xi: float


@dataclass(frozen=True, eq=False)
class ParamSet:
    """The four coefficients of the perturbed system, plus optional linear damping.

    Attributes:
        alpha, beta, gamma, xi: Coefficient functions.
        b, kappa, lam: Constants of the preset the set was built from, if any.
        damping: λ of an explicit ``+λm, +λσ`` damping term (0 for none).
    """

    alpha: ParamFn
    beta: ParamFn
    gamma: ParamFn
    xi: ParamFn
    b: float | None = None
    kappa: float | None = None
    lam: float | None = None
    damping: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.damping) and self.damping >= 0.0):
            raise ParameterError(f"damping must be finite and >= 0, got {self.damping}")

    # -- presets ------------------------------------------------------------

    @classmethod
    def constant(cls, alpha: float, beta: float, gamma: float, xi: float, *, damping: float = 0.0) -> ParamSet:
        return cls(
            ParamFn.constant(alpha),
            ParamFn.constant(beta),
            ParamFn.constant(gamma),
            ParamFn.constant(xi),
            damping=damping,
        )

    @classmethod
    def b_family(cls, b: float, kappa: float, *, damping: float = 0.0) -> ParamSet:
        """Two-component b-family: α = ξ = 1, β = b, γ = κ, optional damping λ."""
        ps = cls.constant(1.0, b, kappa, 1.0, damping=damping)
        return replace(ps, b=float(b), kappa=float(kappa), lam=float(damping) if damping else None)

    @classmethod
    def damped(cls, b: float, kappa: float, lam: float) -> ParamSet:
        """Coefficients of the damped system rewritten for m̃ = e^{λt} m, σ̃ = e^{λt} σ.

        Substituting the weights turns every quadratic term into e^{-λt} times the same
        term in the weighted variables, so α = ξ = e^{-λt}, β = b e^{-λt}, γ = κ e^{-λt}.
        """
        if not lam > 0.0:
            raise ParameterError(f"damped preset requires λ > 0, got {lam}")
        rate = 0.5 * lam
        return cls(
            ParamFn.damped_exp(1.0, rate),
            ParamFn.damped_exp(b, rate),
            ParamFn.damped_exp(kappa, rate),
            ParamFn.damped_exp(1.0, rate),
            b=float(b),
            kappa=float(kappa),
            lam=float(lam),
        )

    @classmethod
    def zero(cls) -> ParamSet:
        return cls.constant(0.0, 0.0, 0.0, 0.0)

    # -- queries ------------------------------------------------------------

    def functions(self) -> dict[CoefficientName, ParamFn]:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "xi": self.xi}

    def coefficients(self, t: float) -> Coefficients:
        return Coefficients(self.alpha(t), self.beta(t), self.gamma(t), self.xi(t))

    def mass(self, t_end: float = math.inf, which: Iterable[CoefficientName] = COEFFICIENT_NAMES) -> float:
        """Sum of the L1 masses of the selected coefficients over [0, t_end]."""
        fns = self.functions()
        return math.fsum(fns[name].l1_mass(t_end) for name in which)

    def scaled(self, theta: float) -> ParamSet:
        """All four coefficients multiplied by ``theta``; damping is kept."""
        return replace(
            self,
            alpha=self.alpha.scaled(theta),
            beta=self.beta.scaled(theta),
            gamma=self.gamma.scaled(theta),
            xi=self.xi.scaled(theta),
        )

    def sample_times(self, horizon: float | None = None, samples: int = 65) -> NDArray[np.float64]:
        if horizon is None:
            ends = [f.table_end for f in self.functions().values() if math.isfinite(f.table_end)]
            horizon = max(ends, default=10.0)
        return np.linspace(0.0, horizon, samples)

    def is_reduced(self, horizon: float | None = None) -> bool:
        """True when β(t) = 3α(t) at the sample times."""
        ts = self.sample_times(horizon)
        a = self.alpha.sample(ts)
        return bool(np.allclose(self.beta.sample(ts), 3.0 * a, rtol=1e-12, atol=1e-14))

    def require_reduced(self, horizon: float | None = None) -> None:
        if not self.is_reduced(horizon):
            raise ParameterError("this quantity is defined for the reduced system with β ≡ 3α")

    def describe(self) -> dict[str, object]:
        out: dict[str, object] = {name: fn.describe() for name, fn in self.functions().items()}
        out.update(b=self.b, kappa=self.kappa, lam=self.lam, damping=self.damping)
        return out


@dataclass(frozen=True)
class SignVerdict:
    """Outcome of :func:`sign_check`."""

    holds: bool
    first_violation: float | None = None

    def __bool__(self) -> bool:
        return self.holds


def sign_check(ps: ParamSet, horizon: float, samples: int) -> SignVerdict:
    """Check ξ >= 0 and α + γ + ξ >= 0 on ``samples`` equispaced times in [0, horizon]."""
    if samples < 2:
        raise ParameterError(f"sign_check needs at least 2 samples, got {samples}")
    ts = np.linspace(0.0, horizon, samples)
    xi = ps.xi.sample(ts)
    total = ps.alpha.sample(ts) + ps.gamma.sample(ts) + xi
    bad = (xi < -_SIGN_TOLERANCE) | (total < -_SIGN_TOLERANCE)
    if np.any(bad):
        return SignVerdict(False, float(ts[int(np.argmax(bad))]))
    return SignVerdict(True)
