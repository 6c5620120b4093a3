"""Right-hand sides of the perturbed two-component system and its damping transforms.

The velocity u and the second component σ evolve by

    u_t = -α u u_x - ∂_x p*(β/2 u² + γ/2 σ² + (3α - β)/2 u_x²) - λ u,
    σ_t = -ξ (u σ_x + σ u_x) - λ σ,

which is the same system as the momentum form

    m_t + α u m_x + β u_x m + γ σ σ_x + λ m = 0,    m = u - u_xx,
    σ_t + ξ (u σ)_x + λ σ = 0.

λ is :attr:`ParamSet.damping`; it is zero unless the weakly dissipative system is
being simulated directly.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Literal

from wavebreak.errors import GridError, OutOfRangeError, ParameterError
from wavebreak.params import ParamSet
from wavebreak.spectral import (
    Field,
    FieldHistory,
    FloatArray,
    Grid,
    dealiased_product,
    derivative,
    green_convolve,
    helmholtz_apply,
    helmholtz_inverse,
)

__all__ = [
    "RHS",
    "RhsFn",
    "RhsKind",
    "State",
    "StateHistory",
    "Tendency",
    "exp_weight_transform",
    "resolve_rhs",
    "rhs_momentum",
    "rhs_nonlocal",
    "rescaled_time",
    "time_rescale_transform",
]


@dataclass(frozen=True)
class State:
    """The pair (u, σ) at time t."""

    u: Field
    sigma: Field
    t: float = 0.0

    def __post_init__(self) -> None:
        if self.u.grid != self.sigma.grid:
            raise GridError("u and sigma must share one grid")
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise ParameterError(f"state time must be finite and >= 0, got {self.t}")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> State:
        return cls(Field.zeros(grid), Field.zeros(grid), t)

    def momentum(self) -> Field:
        """m = (1 - ∂_x²) u."""
        return helmholtz_apply(self.u, 1.0)

    def scaled(self, factor: float, t: float | None = None) -> State:
        return State(self.u * factor, self.sigma * factor, self.t if t is None else t)

    def shifted(self, cells: int) -> State:
        return State(self.u.shifted(cells), self.sigma.shifted(cells), self.t)


@dataclass(frozen=True)
class Tendency:
    """Time derivatives (du/dt, dσ/dt)."""

    du: Field
    dsigma: Field


@dataclass(frozen=True)
class StateHistory:
    """States at increasing times, linearly interpolated in between."""

    u: FieldHistory
    sigma: FieldHistory

    def __post_init__(self) -> None:
        if self.u.grid != self.sigma.grid:
            raise GridError("u and sigma histories must share one grid")
        if self.u.times.shape != self.sigma.times.shape or (self.u.times != self.sigma.times).any():
            raise OutOfRangeError("u and sigma histories must share their times")

    @classmethod
    def from_states(cls, states: Sequence[State]) -> StateHistory:
        times = [s.t for s in states]
        return cls(
            FieldHistory.from_fields(times, [s.u for s in states]),
            FieldHistory.from_fields(times, [s.sigma for s in states]),
        )

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def times(self) -> FloatArray:
        return self.u.times

    def __len__(self) -> int:
        return len(self.u)

    def state(self, i: int) -> State:
        return State(self.u.field(i), self.sigma.field(i), float(self.times[i]))

    def at(self, t: float) -> State:
        """Interpolated state; raises OutOfRangeError outside the stored times."""
        return State(self.u.at(t), self.sigma.at(t), max(float(t), 0.0))


RhsFn = Callable[[State, ParamSet], Tendency]
RhsKind = Literal["nonlocal", "momentum"]


def rhs_nonlocal(s: State, ps: ParamSet) -> Tendency:
    """Tendency from the nonlocal (transport plus Green's-function) form."""
    a, b, g, xi = ps.coefficients(s.t)
    u, sigma = s.u, s.sigma
    ux = derivative(u)
    sx = derivative(sigma)

    source = (
        0.5 * b * dealiased_product(u, u)
        + 0.5 * g * dealiased_product(sigma, sigma)
        + 0.5 * (3.0 * a - b) * dealiased_product(ux, ux)
    )
    du = -a * dealiased_product(u, ux) - derivative(green_convolve(source))
    dsigma = -xi * (dealiased_product(u, sx) + dealiased_product(sigma, ux))
    if ps.damping:
        du = du - ps.damping * u
        dsigma = dsigma - ps.damping * sigma
    return Tendency(du, dsigma)


def rhs_momentum(s: State, ps: ParamSet) -> Tendency:
    """Tendency from the momentum form, inverting (1 - ∂_x²) at the end."""
    a, b, g, xi = ps.coefficients(s.t)
    u, sigma = s.u, s.sigma
    m = helmholtz_apply(u, 1.0)
    mt = (
        -a * dealiased_product(u, derivative(m))
        - b * dealiased_product(derivative(u), m)
        - g * dealiased_product(sigma, derivative(sigma))
    )
    dsigma = -xi * derivative(dealiased_product(u, sigma))
    if ps.damping:
        mt = mt - ps.damping * m
        dsigma = dsigma - ps.damping * sigma
    return Tendency(helmholtz_inverse(mt, 1.0), dsigma)


RHS: dict[RhsKind, RhsFn] = {"nonlocal": rhs_nonlocal, "momentum": rhs_momentum}


def resolve_rhs(rhs: RhsKind | RhsFn) -> RhsFn:
    """Map a selector name to its function; callables pass through."""
    if callable(rhs):
        return rhs
    try:
        return RHS[rhs]
    except KeyError:
        raise ParameterError(f"unknown right-hand side {rhs!r}; choose from {sorted(RHS)}") from None


def rescaled_time(lam: float, t: float) -> float:
    """s = (1 - e^{-λt}) / λ, the undamped time matching damped time t."""
    if not lam > 0.0:
        raise ParameterError(f"λ must be positive, got {lam}")
    return -math.expm1(-lam * t) / lam


def time_rescale_transform(v_solution: StateHistory, lam: float, t: float) -> State:
    """Damped state at time ``t`` predicted from an undamped solution.

    ``u(t) = e^{-λt} v(s)`` and ``σ(t) = e^{-λt} ρ(s)`` with ``s = (1 - e^{-λt})/λ``;
    v and ρ are interpolated linearly in time between stored frames.

    Raises:
        OutOfRangeError: s is not covered by the stored frames.
    """
    s = rescaled_time(lam, t)
    decay = math.exp(-lam * t)
    return v_solution.at(s).scaled(decay, t)


def exp_weight_transform(s: State, lam: float, direction: Literal["forward", "inverse"]) -> State:
    """Multiply (forward) or divide (inverse) u and σ by e^{λ t}."""
    if not lam > 0.0:
        raise ParameterError(f"λ must be positive, got {lam}")
    if direction == "forward":
        factor = math.exp(lam * s.t)
    elif direction == "inverse":
        factor = math.exp(-lam * s.t)
    else:
        raise ParameterError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return s.scaled(factor)
