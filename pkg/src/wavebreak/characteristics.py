"""Flow map of ξ(t)u, its Jacobian, and the σ quantities transported along it."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from wavebreak.dynamics import StateHistory
from wavebreak.errors import FramesTooSparseError, ParameterError
from wavebreak.integrator import SimResult
from wavebreak.log import get_logger
from wavebreak.params import ParamSet
from wavebreak.spectral import FloatArray, evaluate_at, evaluate_with_slope

__all__ = ["CharTrace", "SigmaBounds", "sigma_bounds_check", "sigma_invariant_error", "trace"]

logger = get_logger(__name__)

_SPARSITY_FACTOR = 10.0
_BOUND_SLACK = 1e-6


@dataclass(frozen=True, eq=False)
class CharTrace:
    """Characteristics ψ(t, x0) recorded at the frame times of a run.

    Attributes:
        seeds: Initial positions x0, shape (S,).
        times: Frame times, shape (F,).
        unwrapped: ψ without periodic wrapping, shape (F, S).
        jacobians: ψ_x from the exponential of ∫ ξ u_x along the path, shape (F, S).
        jacobians_fd: ψ_x from differences across neighboring seeds, shape (F, S).
        integral_inf_xi_ux: ∫_0^t inf_x{ξ u_x} at the frame times, shape (F,).
        length: Period L.
    """

    seeds: FloatArray
    times: FloatArray
    unwrapped: FloatArray
    jacobians: FloatArray
    jacobians_fd: FloatArray
    integral_inf_xi_ux: FloatArray
    length: float

    @property
    def positions(self) -> FloatArray:
        """ψ wrapped into [0, L)."""
        return np.mod(self.unwrapped, self.length)


def _check_density(result: SimResult) -> float:
    """Median step of the run; raises if frames are more than ten median steps apart."""
    steps = result.series["dt"][1:]
    steps = steps[steps > 0.0]
    if steps.size == 0:
        return 0.0
    median_dt = float(np.median(steps))
    frame_times = result.frame_times
    if frame_times.size > 1:
        widest = float(np.max(np.diff(frame_times)))
        if widest > _SPARSITY_FACTOR * median_dt * (1.0 + 1e-9):
            raise FramesTooSparseError(
                f"frames are {widest:.3g} apart, more than {_SPARSITY_FACTOR:g} x the median step {median_dt:.3g}"
            )
    return median_dt


def _neighbor_jacobians(seeds: FloatArray, unwrapped: FloatArray, length: float) -> FloatArray:
    """Central differences across seeds, using ψ(x0 + L) = ψ(x0) + L for the periodic neighbors."""
    order = np.argsort(seeds)
    x = seeds[order]
    psi = unwrapped[:, order]
    x_ext = np.concatenate(([x[-1] - length], x, [x[0] + length]))
    psi_ext = np.concatenate((psi[:, -1:] - length, psi, psi[:, :1] + length), axis=1)
    fd = (psi_ext[:, 2:] - psi_ext[:, :-2]) / (x_ext[2:] - x_ext[:-2])
    out = np.empty_like(fd)
    out[:, order] = fd
    return out


def _integrate_posthoc(
    history: StateHistory, ps: ParamSet, seeds: FloatArray, median_dt: float
) -> tuple[FloatArray, FloatArray]:
    """RK4 for dψ/dt = ξu(ψ) and d(log ψ_x)/dt = ξu_x(ψ) with u linear in time between frames."""
    times = history.times
    psi = seeds.copy()
    logj = np.zeros_like(seeds)
    positions = [psi.copy()]
    logs = [logj.copy()]

    def rates(t: float, pos: FloatArray) -> tuple[FloatArray, FloatArray]:
        xi = ps.xi(t)
        vals, slopes = evaluate_with_slope(history.u.at(t), pos)
        return xi * vals, xi * slopes

    for t0, t1 in zip(times[:-1], times[1:], strict=True):
        n_sub = max(1, math.ceil((t1 - t0) / median_dt)) if median_dt > 0.0 else 1
        h = (t1 - t0) / n_sub
        for i in range(n_sub):
            t = float(t0 + i * h)
            t_next = float(t1) if i == n_sub - 1 else t + h
            mid = 0.5 * (t + t_next)
            k1, l1 = rates(t, psi)
            k2, l2 = rates(mid, psi + 0.5 * h * k1)
            k3, l3 = rates(mid, psi + 0.5 * h * k2)
            k4, l4 = rates(t_next, psi + h * k3)
            psi = psi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            logj = logj + h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        positions.append(psi.copy())
        logs.append(logj.copy())
    return np.array(positions), np.array(logs)


def trace(result: SimResult, ps: ParamSet, seeds: ArrayLike | None = None) -> CharTrace:
    """Characteristics of a finished run at its frame times.

    Without ``seeds`` the tracers carried by :func:`~wavebreak.integrator.simulate` are
    reused. Explicit seeds are integrated afterwards from the stored frames.

    Raises:
        FramesTooSparseError: frames are more than ten median steps apart.
    """
    median_dt = _check_density(result)
    grid = result.initial.grid
    times = result.frame_times
    integral = np.interp(times, result.series.t, result.series["int_inf_xi_ux"])

    if seeds is None and result.seeds.size:
        seed_arr = result.seeds
        unwrapped = result.tracer_positions
        log_jac = result.tracer_log_jacobians
    else:
        seed_arr = np.atleast_1d(np.asarray(seeds if seeds is not None else grid.x, dtype=np.float64))
        if seed_arr.ndim != 1 or seed_arr.size == 0:
            raise ParameterError("seeds must be a non-empty list of positions")
        logger.debug("integrating %d characteristics over %d frames", seed_arr.size, times.size)
        unwrapped, log_jac = _integrate_posthoc(result.history(), ps, seed_arr, median_dt)

    return CharTrace(
        seeds=seed_arr,
        times=times,
        unwrapped=unwrapped,
        jacobians=np.exp(log_jac),
        jacobians_fd=_neighbor_jacobians(seed_arr, unwrapped, grid.length),
        integral_inf_xi_ux=integral,
        length=grid.length,
    )


def sigma_invariant_error(result: SimResult, trace: CharTrace) -> float:
    """max over seeds and times of |σ(t, ψ) ψ_x - σ0(x0)|."""
    history = result.history()
    sigma0 = evaluate_at(result.initial.sigma, trace.seeds)
    worst = 0.0
    for i, t in enumerate(trace.times):
        sigma_t = history.sigma.at(float(t))
        transported = evaluate_at(sigma_t, trace.positions[i]) * trace.jacobians[i]
        worst = max(worst, float(np.max(np.abs(transported - sigma0))))
    return worst


@dataclass(frozen=True)
class SigmaBounds:
    """Whether the L^∞ and L² bounds on σ held at every trace time."""

    linf_holds: bool
    l2_holds: bool

    @property
    def holds(self) -> bool:
        return self.linf_holds and self.l2_holds

    def __bool__(self) -> bool:
        return self.holds


def sigma_bounds_check(result: SimResult, trace: CharTrace) -> SigmaBounds:
    """‖σ(t)‖_{L^∞} <= ‖σ0‖_{L^∞} e^{-I(t)} and ‖σ(t)‖_{L²} <= ‖σ0‖_{L²} e^{-I(t)/2}, I = ∫ inf_x ξu_x."""
    history = result.history()
    sigma0 = result.initial.sigma
    slack = 1.0 + _BOUND_SLACK
    linf_ok = l2_ok = True
    with np.errstate(over="ignore"):
        growth = np.exp(-trace.integral_inf_xi_ux)
    for t, factor in zip(trace.times, growth, strict=True):
        sigma_t = history.sigma.at(float(t))
        linf_ok = linf_ok and bool(sigma_t.linf_norm() <= sigma0.linf_norm() * factor * slack)
        l2_ok = l2_ok and bool(sigma_t.l2_norm() <= sigma0.l2_norm() * math.sqrt(factor) * slack)
    return SigmaBounds(linf_ok, l2_ok)
