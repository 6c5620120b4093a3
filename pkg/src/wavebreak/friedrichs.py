"""Iterated linear transport approximation of the perturbed system.

Iterate n + 1 solves two linear transport problems whose advectors and forcings are
built from iterate n:

    u⁺_t + α u u⁺_x = -∂_x p*(β/2 u² + γ/2 σ² + (3α - β)/2 u_x²) - λ u,   u⁺(0) = S_{n+1} u0,
    σ⁺_t + ξ u σ⁺_x = -ξ σ u_x - λ σ,                                      σ⁺(0) = S_{n+1} σ0,

starting from the time-independent iterate (S_1 u0, S_1 σ0).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import integrate

from wavebreak.dynamics import State, StateHistory
from wavebreak.errors import NonFiniteFieldError, OutOfRangeError, ParameterError, TransportInstabilityError
from wavebreak.integrator import SimResult
from wavebreak.littlewood_paley import BesovSpec, besov_norm, low_pass
from wavebreak.log import get_logger
from wavebreak.params import ParamFn, ParamSet
from wavebreak.spectral import Field, FieldHistory, FloatArray, dealiased_product, derivative, green_convolve
from wavebreak.theory import lemma32_bound

__all__ = [
    "CauchyDifferences",
    "IterateRecord",
    "cauchy_differences",
    "distance_to_solution",
    "iterate",
    "lemma32_envelope",
    "linear_transport_solve",
    "transport_estimate_ratio",
]

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class IterateRecord:
    """One iterate on the output-time grid.

    Attributes:
        n: Iteration index, starting at 1.
        solution: (u⁽ⁿ⁾, σ⁽ⁿ⁾) at the output times.
        H_series: ‖u⁽ⁿ⁾‖_{B^s} + ‖σ⁽ⁿ⁾‖_{B^{s-1}} at the output times.
        spec: Besov indices used for ``H_series``.
    """

    n: int
    solution: StateHistory
    H_series: FloatArray
    spec: BesovSpec

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.H_series)):
            raise TransportInstabilityError(f"iterate {self.n} has a non-finite norm", iteration=self.n)

    @property
    def times(self) -> FloatArray:
        return self.solution.times


def linear_transport_solve(
    advector: FieldHistory,
    coefficient: ParamFn,
    forcing: FieldHistory | None,
    f0: Field,
    T: float,
    *,
    times: Sequence[float] | FloatArray | None = None,
    cfl: float = 0.25,
    max_step: float | None = None,
) -> FieldHistory:
    """Solve f_t + c(t) a(t, x) f_x = F(t, x) on [0, T] with RK4 in time and spectral derivatives.

    ``a`` and ``F`` are interpolated linearly in time between their stored samples.

    Args:
        advector: a(t, x), covering [0, T].
        coefficient: c(t).
        forcing: F(t, x) covering [0, T], or None for F = 0.
        f0: Initial value.
        T: Final time.
        times: Output times in [0, T] starting at 0; defaults to the advector's times.
        cfl: Courant number for the substeps.
        max_step: Upper bound on the substep.

    Raises:
        TransportInstabilityError: the solution became non-finite.
        OutOfRangeError: advector or forcing do not cover an output time.
    """
    if not T > 0.0:
        raise ParameterError(f"T must be positive, got {T}")
    grid = f0.grid
    out_times = np.asarray(advector.times if times is None else times, dtype=np.float64)
    out_times = out_times[out_times <= T * (1.0 + 1e-12)]
    if out_times.size == 0 or out_times[0] != 0.0:
        raise OutOfRangeError("output times must start at 0")

    def rate(t: float, f: Field) -> Field:
        a = advector.at(t) * coefficient(t)
        df = -dealiased_product(a, derivative(f))
        return df if forcing is None else df + forcing.at(t)

    def substep_count(t0: float, t1: float) -> int:
        speed = max(
            abs(coefficient(t0)) * float(np.max(np.abs(advector.values_at(t0)))),
            abs(coefficient(t1)) * float(np.max(np.abs(advector.values_at(t1)))),
        )
        dt = t1 - t0
        if speed > 0.0:
            dt = min(dt, cfl * grid.dx / speed)
        if max_step is not None:
            dt = min(dt, max_step)
        return max(1, math.ceil((t1 - t0) / dt - 1e-9))

    f = f0
    samples = [f0]
    try:
        for t0, t1 in zip(out_times[:-1], out_times[1:], strict=True):
            n_sub = substep_count(float(t0), float(t1))
            h = (t1 - t0) / n_sub
            for i in range(n_sub):
                t = float(t0 + i * h)
                k1 = rate(t, f)
                k2 = rate(t + 0.5 * h, f + k1 * (0.5 * h))
                k3 = rate(t + 0.5 * h, f + k2 * (0.5 * h))
                k4 = rate(t + h, f + k3 * h)
                f = f + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0)
            samples.append(f)
    except NonFiniteFieldError as exc:
        raise TransportInstabilityError(f"linear transport solve became non-finite: {exc}") from exc
    return FieldHistory.from_fields(out_times, samples)


def _h_norm(s: State, spec: BesovSpec) -> float:
    return besov_norm(s.u, spec) + besov_norm(s.sigma, spec.shifted(-1.0))


def _record(n: int, history: StateHistory, spec: BesovSpec) -> IterateRecord:
    h = np.array([_h_norm(history.state(i), spec) for i in range(len(history))])
    return IterateRecord(n, history, h, spec)


def _forcings(current: StateHistory, ps: ParamSet) -> tuple[FieldHistory, FieldHistory]:
    u_forcing: list[Field] = []
    sigma_forcing: list[Field] = []
    for i in range(len(current)):
        s = current.state(i)
        a, b, g, xi = ps.coefficients(s.t)
        u, sigma = s.u, s.sigma
        ux = derivative(u)
        source = (
            0.5 * b * dealiased_product(u, u)
            + 0.5 * g * dealiased_product(sigma, sigma)
            + 0.5 * (3.0 * a - b) * dealiased_product(ux, ux)
        )
        fu = -derivative(green_convolve(source))
        fs = -xi * dealiased_product(sigma, ux)
        if ps.damping:
            fu = fu - ps.damping * u
            fs = fs - ps.damping * sigma
        u_forcing.append(fu)
        sigma_forcing.append(fs)
    return (
        FieldHistory.from_fields(current.times, u_forcing),
        FieldHistory.from_fields(current.times, sigma_forcing),
    )


def iterate(
    u0: Field,
    sigma0: Field,
    ps: ParamSet,
    spec: BesovSpec,
    T: float,
    n_max: int,
    *,
    n_frames: int = 200,
    cfl: float = 0.25,
) -> list[IterateRecord]:
    """Run ``n_max`` iterates on ``n_frames + 1`` equispaced output times over [0, T].

    Raises:
        TransportInstabilityError: a linear solve failed; ``iteration`` names the iterate being built.
    """
    if n_max < 1:
        raise ParameterError(f"n_max must be >= 1, got {n_max}")
    if not T > 0.0:
        raise ParameterError(f"T must be positive, got {T}")
    if n_frames < 1:
        raise ParameterError(f"n_frames must be >= 1, got {n_frames}")
    times = np.linspace(0.0, T, n_frames + 1)
    max_step = T / n_frames

    first = State(low_pass(u0, 1), low_pass(sigma0, 1))
    history = StateHistory.from_states([State(first.u, first.sigma, float(t)) for t in times])
    records = [_record(1, history, spec)]
    logger.info("iterate 1: sup H = %.6g", float(np.max(records[0].H_series)))

    for n in range(1, n_max):
        u_forcing, sigma_forcing = _forcings(history, ps)
        try:
            u_next = linear_transport_solve(
                history.u, ps.alpha, u_forcing, low_pass(u0, n + 1), T, times=times, cfl=cfl, max_step=max_step
            )
            sigma_next = linear_transport_solve(
                history.u, ps.xi, sigma_forcing, low_pass(sigma0, n + 1), T, times=times, cfl=cfl, max_step=max_step
            )
        except TransportInstabilityError as exc:
            raise TransportInstabilityError(f"iterate {n + 1}: {exc}", iteration=n + 1) from exc
        history = StateHistory(u_next, sigma_next)
        records.append(_record(n + 1, history, spec))
        logger.info("iterate %d: sup H = %.6g", n + 1, float(np.max(records[-1].H_series)))
    return records


@dataclass(frozen=True, eq=False)
class CauchyDifferences:
    """Differences between iterates n and n + m in the B^{s-1} x B^{s-2} norm.

    Attributes:
        m: Index gap.
        indices: The n values, shape (K,).
        times: Output times, shape (F,).
        series: Difference norm per (n, t), shape (K, F).
    """

    m: int
    indices: NDArray[np.int64]
    times: FloatArray
    series: FloatArray

    @property
    def sup(self) -> FloatArray:
        """sup over time for each n."""
        return np.max(self.series, axis=1)

    def at(self, n: int) -> FloatArray:
        hits = np.flatnonzero(self.indices == n)
        if hits.size == 0:
            raise OutOfRangeError(f"no difference stored for n = {n}")
        return self.series[int(hits[0])]

    def ratios(self, floor: float = 1e-12) -> FloatArray:
        """sup_{n+1} / sup_n, NaN where sup_n is below ``floor``."""
        sup = self.sup
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(sup[:-1] > floor, sup[1:] / sup[:-1], np.nan)


def cauchy_differences(records: Sequence[IterateRecord], m: int) -> CauchyDifferences:
    """𝓗⁽ⁿ,ᵐ⁾(t) for every stored n with n + m also stored."""
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    by_index = {r.n: r for r in records}
    indices = [n for n in sorted(by_index) if n + m in by_index]
    if not indices:
        raise OutOfRangeError(f"no pair of iterates {m} apart among {sorted(by_index)}")
    spec = by_index[indices[0]].spec
    low, lower = spec.shifted(-1.0), spec.shifted(-2.0)
    times = by_index[indices[0]].times
    rows = []
    for n in indices:
        a, b = by_index[n].solution, by_index[n + m].solution
        rows.append(
            [
                besov_norm(a.u.field(i) - b.u.field(i), low) + besov_norm(a.sigma.field(i) - b.sigma.field(i), lower)
                for i in range(len(a))
            ]
        )
    return CauchyDifferences(m, np.array(indices, dtype=np.int64), np.array(times), np.array(rows))


def lemma32_envelope(
    diffs: CauchyDifferences, ps: ParamSet, T: float, c_hat: float | None = None
) -> FloatArray:
    """Recursive-inequality bound on sup_t 𝓗⁽ⁿ,ᵐ⁾ for each stored n.

    Uses a_k = Ĉ 2^{-k}, μ = |α| + |β| + |γ| + |ξ| on [0, T] and g0 = sup_t 𝓗⁽¹,ᵐ⁾.
    The entry for 𝓗⁽ⁿ,ᵐ⁾ is the bound at recursion index n - 1, so index 1 controls 𝓗⁽²,ᵐ⁾.
    Without ``c_hat`` the constant is fitted at index 1: a_1 = Ĉ/2 equals the measured
    sup_t 𝓗⁽²,ᵐ⁾, or g0 when only the first difference is stored.
    """
    sup = diffs.sup
    g0 = float(diffs.at(1).max()) if 1 in diffs.indices else float(sup[0])
    if c_hat is None:
        c_hat = 2.0 * float(diffs.at(2).max()) if 2 in diffs.indices else 2.0 * g0
    mu_mass = ps.mass(T)
    a_seq = [c_hat * 2.0**-k for k in range(int(diffs.indices.max()) + 1)]
    return np.array([lemma32_bound(a_seq, mu_mass, g0, int(n) - 1) for n in diffs.indices])


def distance_to_solution(record: IterateRecord, result: SimResult) -> float:
    """sup over the record times of ‖u⁽ⁿ⁾ - u‖_{B^{s-1}} + ‖σ⁽ⁿ⁾ - σ‖_{B^{s-2}} against a simulation."""
    history = result.history()
    low, lower = record.spec.shifted(-1.0), record.spec.shifted(-2.0)
    worst = 0.0
    for i, t in enumerate(record.times):
        ref = history.at(float(t))
        it = record.solution.state(i)
        worst = max(worst, besov_norm(it.u - ref.u, low) + besov_norm(it.sigma - ref.sigma, lower))
    return worst


def transport_estimate_ratio(
    f: FieldHistory,
    advector: FieldHistory,
    coefficient: ParamFn,
    forcing: FieldHistory | None,
    spec: BesovSpec,
) -> FloatArray:
    """‖f(t)‖_{B^s} divided by e^{V(t)} (‖f(0)‖_{B^s} + ∫_0^t e^{-V} ‖F‖_{B^s}), per time of ``f``.

    V(t) = ∫ ‖∂_x v‖_{B^{s-1}} for s > 1 + 1/p, otherwise ∫ (‖∂_x v‖_{B^{1/p}_{p,∞}} + ‖∂_x v‖_{L^∞}),
    with v = c(t) a(t, x). Values at most 1 mean the estimate holds with constant 1.
    """
    times = f.times
    inv_p = 0.0 if math.isinf(spec.p) else 1.0 / spec.p
    critical = spec.s <= 1.0 + inv_p
    low = BesovSpec(s=inv_p, p=spec.p, r=math.inf) if critical else spec.shifted(-1.0)

    v_rate = np.empty_like(times)
    f_rate = np.zeros_like(times)
    norms = np.empty_like(times)
    for i, t in enumerate(times):
        vx = derivative(advector.at(float(t))) * coefficient(float(t))
        v_rate[i] = besov_norm(vx, low) + (vx.linf_norm() if critical else 0.0)
        norms[i] = besov_norm(f.field(i), spec)
        if forcing is not None:
            f_rate[i] = besov_norm(forcing.at(float(t)), spec)

    v = integrate.cumulative_trapezoid(v_rate, times, initial=0.0)
    with np.errstate(over="ignore"):
        source = integrate.cumulative_trapezoid(np.exp(-v) * f_rate, times, initial=0.0)
        bound = np.exp(v) * (norms[0] + source)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(bound > 0.0, norms / bound, 0.0)
