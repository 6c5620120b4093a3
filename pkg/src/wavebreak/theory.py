"""Closed-form theorem quantities and their comparison against simulations.

Every smallness condition involves an unspecified constant C. It is carried by
:class:`TheoryConfig` (default 1) and every verdict reports a margin, so results can
be reread under a different C.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import pydantic
from numpy.typing import NDArray
from scipy import optimize

from wavebreak.errors import DivergentMassError, HypothesisError, ParameterError
from wavebreak.littlewood_paley import BesovSpec, besov_norm, sobolev_norm
from wavebreak.log import get_logger
from wavebreak.params import CoefficientName, ParamSet, SignVerdict, sign_check
from wavebreak.spectral import Field

if TYPE_CHECKING:
    from wavebreak.characteristics import CharTrace
    from wavebreak.dynamics import State
    from wavebreak.integrator import SimResult

__all__ = [
    "BlowupBound",
    "BoundReport",
    "TheoremVerdict",
    "TheoryConfig",
    "WaveBreakingReport",
    "blowup_lower_bound",
    "data_norm",
    "h_modulus",
    "lambda_min_for_norm",
    "lemma32_bound",
    "lemma41_bounds",
    "L_of_t",
    "m_chi_drift",
    "m_chi_functional",
    "modulus_from_masses",
    "remark14_lambda_min",
    "slope_bound_report",
    "theorem11_check",
    "theorem11_condition",
    "theorem11_max_data_norm",
    "theorem13_check",
    "theorem13_condition",
    "theorem13_max_data_norm",
    "wave_breaking_report",
]

logger = get_logger(__name__)

LN2 = math.log(2.0)
_EXP_MAX = 709.0
_BLOWUP_NAMES: tuple[CoefficientName, ...] = ("alpha", "gamma", "xi")


class TheoryConfig(pydantic.BaseModel):
    """Constant C of the a priori estimates and the Sobolev index s (> 3/2)."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    C: float = pydantic.Field(default=1.0, gt=0.0, allow_inf_nan=False)
    s: float = pydantic.Field(default=2.0, gt=1.5, allow_inf_nan=False)


@dataclass(frozen=True)
class TheoremVerdict:
    """Outcome of a scalar theorem condition ``lhs <= rhs``.

    Attributes:
        margin: lhs / rhs; at most 1 exactly when the condition holds.
        degenerate: The right side is infinite by convention (zero data).
    """

    name: str
    holds: bool
    margin: float
    lhs: float
    rhs: float
    degenerate: bool = False

    def __bool__(self) -> bool:
        return self.holds

    def describe(self) -> dict[str, object]:
        return {
            "name": self.name,
            "holds": self.holds,
            "margin": self.margin,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True, eq=False)
class BoundReport:
    """A bound series compared against an observed series at the same times.

    Attributes:
        margin: Smallest bound/observed ratio over times after the first.
    """

    name: str
    times: NDArray[np.float64]
    bound_value: NDArray[np.float64]
    observed: NDArray[np.float64]
    satisfied: bool
    margin: float

    def __post_init__(self) -> None:
        if not (self.times.shape == self.bound_value.shape == self.observed.shape):
            raise ParameterError(f"{self.name}: bound and observed series lengths differ")

    @classmethod
    def compare(
        cls,
        name: str,
        times: NDArray[np.float64],
        bound: NDArray[np.float64],
        observed: NDArray[np.float64],
        *,
        rtol: float = 1e-9,
    ) -> BoundReport:
        satisfied = bool(np.all(observed <= bound * (1.0 + rtol) + 1e-300))
        later = np.arange(times.size) > 0
        usable = later & (observed > 0.0)
        if np.any(usable):
            with np.errstate(over="ignore", invalid="ignore"):
                margin = float(np.min(bound[usable] / observed[usable]))
        else:
            margin = math.inf
        return cls(name, times, bound, observed, satisfied, margin)

    def describe(self) -> dict[str, object]:
        return {"name": self.name, "satisfied": self.satisfied, "margin": self.margin, "points": int(self.times.size)}


@dataclass(frozen=True)
class BlowupBound:
    """Lower bound on the blow-up time and the global-existence conclusions attached to it.

    Attributes:
        time: sup{t : ∫_0^t (|α| + |γ| + |ξ|) <= threshold}, possibly infinite.
        threshold: 1 / (C (‖u0‖_{H^s} + ‖σ0‖_{H^{s-1}})).
        data_norm: ‖u0‖_{H^s} + ‖σ0‖_{H^{s-1}}.
        total_mass: ∫_0^∞ (|α| + |γ| + |ξ|), possibly infinite.
        global_by_mass: total_mass <= threshold / 2, which yields a global solution.
    """

    time: float
    threshold: float
    data_norm: float
    total_mass: float
    global_by_mass: bool

    @property
    def global_existence(self) -> bool:
        return math.isinf(self.time)

    def describe(self) -> dict[str, object]:
        return {
            "time": self.time,
            "threshold": self.threshold,
            "data_norm": self.data_norm,
            "total_mass": self.total_mass,
            "global_existence": self.global_existence,
            "global_by_mass": self.global_by_mass,
        }


def _exp(x: float) -> float:
    return math.inf if x > _EXP_MAX else math.exp(x)


def _check_besov_hypothesis(spec: BesovSpec) -> None:
    inv_p = 0.0 if math.isinf(spec.p) else 1.0 / spec.p
    needed = max(1.0 + inv_p, 1.5)
    if not spec.s > needed:
        raise HypothesisError(f"global well-posedness needs s > {needed:g} for p = {spec.p:g}, got s = {spec.s:g}")


def data_norm(u0: Field, sigma0: Field, spec: BesovSpec) -> float:
    """‖u0‖_{B^s_{p,r}} + ‖σ0‖_{B^{s-1}_{p,r}}."""
    return besov_norm(u0, spec) + besov_norm(sigma0, spec.shifted(-1.0))


# -- modulus and global existence ------------------------------------------


def modulus_from_masses(x: float, advective_mass: float, total_mass: float, C: float = 1.0) -> float:
    """h(x) = exp(2C²x·A)(x + 4C²x²·B) with A = ∫(|α|+|ξ|), B = ∫(|α|+|β|+|γ|+|ξ|)."""
    if x < 0.0:
        raise ParameterError(f"modulus argument must be >= 0, got {x}")
    c2 = C * C
    return _exp(2.0 * c2 * x * advective_mass) * (x + 4.0 * c2 * x * x * total_mass)


def h_modulus(x: float, ps: ParamSet, cfg: TheoryConfig) -> float:
    """Modulus h(x) of the global-existence condition.

    Raises:
        DivergentMassError: a coefficient has infinite mass on [0, ∞).
    """
    return modulus_from_masses(x, ps.mass(which=("alpha", "xi")), ps.mass(), cfg.C)


def theorem11_condition(h0: float, ps: ParamSet, cfg: TheoryConfig) -> TheoremVerdict:
    """∫_0^∞(|α|+|β|+|γ|+|ξ|) <= ln2 / (6C²h(H0)) for a given data norm H0."""
    lhs = ps.mass()
    if h0 == 0.0:
        logger.warning("zero initial data: global existence holds trivially")
        return TheoremVerdict("theorem11", True, 0.0, lhs, math.inf, degenerate=True)
    rhs = LN2 / (6.0 * cfg.C**2 * h_modulus(h0, ps, cfg))
    margin = lhs / rhs
    return TheoremVerdict("theorem11", lhs <= rhs * (1.0 + 1e-12), margin, lhs, rhs)


def theorem11_check(u0: Field, sigma0: Field, spec: BesovSpec, ps: ParamSet, cfg: TheoryConfig) -> TheoremVerdict:
    """Global-existence smallness condition for the given data.

    Raises:
        HypothesisError: s <= max(1 + 1/p, 3/2).
        DivergentMassError: a coefficient has infinite mass.
    """
    _check_besov_hypothesis(spec)
    return theorem11_condition(data_norm(u0, sigma0, spec), ps, cfg)


def theorem11_max_data_norm(ps: ParamSet, cfg: TheoryConfig) -> float:
    """Largest H0 for which the global-existence condition holds with the given coefficients."""
    total = ps.mass()
    if total == 0.0:
        return math.inf
    target = LN2 / (6.0 * cfg.C**2 * total)

    def excess(x: float) -> float:
        return h_modulus(x, ps, cfg) - target

    hi = 1.0
    while excess(hi) <= 0.0:
        hi *= 2.0
    return float(optimize.bisect(excess, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def lambda_min_for_norm(norm: float, b: float, kappa: float, cfg: TheoryConfig) -> float:
    """8C²(2+|b|+|κ|)/ln2 · norm."""
    return 8.0 * cfg.C**2 * (2.0 + abs(b) + abs(kappa)) / LN2 * norm


def remark14_lambda_min(
    u0: Field, sigma0: Field, spec: BesovSpec, b: float, kappa: float, cfg: TheoryConfig
) -> float:
    """Damping rate that is sufficient for global existence of the damped system."""
    return lambda_min_for_norm(data_norm(u0, sigma0, spec), b, kappa, cfg)


def theorem13_condition(norm: float, b: float, kappa: float, lam: float, cfg: TheoryConfig) -> TheoremVerdict:
    """The damped-system inequality for data norm ``norm`` and damping ``lam``."""
    if not lam > 0.0:
        raise ParameterError(f"λ must be positive, got {lam}")
    c2 = cfg.C**2
    k = 2.0 + abs(b) + abs(kappa)
    rhs = lam * LN2 / (3.0 * c2 * k)
    if norm == 0.0:
        return TheoremVerdict("theorem13", True, 0.0, 0.0, rhs)
    growth = _exp(2.0 * c2 * norm / lam)
    lhs = growth * (norm + 2.0 * c2 * k / lam * norm * norm)
    return TheoremVerdict("theorem13", lhs <= rhs, lhs / rhs, lhs, rhs)


def theorem13_check(
    u0: Field, sigma0: Field, spec: BesovSpec, b: float, kappa: float, lam: float, cfg: TheoryConfig
) -> TheoremVerdict:
    _check_besov_hypothesis(spec)
    return theorem13_condition(data_norm(u0, sigma0, spec), b, kappa, lam, cfg)


def theorem13_max_data_norm(lam: float, b: float, kappa: float, cfg: TheoryConfig) -> float:
    """Data size λ ln2 / (8C²(2+|b|+|κ|)) below which the damped system is globally solvable."""
    return lam * LN2 / (8.0 * cfg.C**2 * (2.0 + abs(b) + abs(kappa)))


# -- blow-up -----------------------------------------------------------------


def blowup_lower_bound(u0: Field, sigma0: Field, s: float, ps: ParamSet, cfg: TheoryConfig) -> BlowupBound:
    """Lower bound on the maximal existence time from the cumulative mass of α, γ, ξ."""
    if not s > 1.5:
        raise HypothesisError(f"the blow-up lower bound needs s > 3/2, got {s}")
    norm = sobolev_norm(u0, s) + sobolev_norm(sigma0, s - 1.0)
    try:
        total = ps.mass(which=_BLOWUP_NAMES)
    except DivergentMassError:
        total = math.inf
    if norm == 0.0:
        return BlowupBound(math.inf, math.inf, 0.0, total, True)
    threshold = 1.0 / (cfg.C * norm)
    global_by_mass = total <= 0.5 * threshold
    if total <= threshold:
        return BlowupBound(math.inf, threshold, norm, total, global_by_mass)

    def excess(t: float) -> float:
        return ps.mass(t, _BLOWUP_NAMES) - threshold

    hi = 1.0
    while excess(hi) <= 0.0:
        hi *= 2.0
    t_star = optimize.bisect(excess, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return BlowupBound(float(t_star), threshold, norm, total, global_by_mass)


def lemma32_bound(a_seq: Sequence[float], mu_mass: float, g0: float, n: int) -> float:
    """Σ_{k=0}^{n} a_{n-k} μ^k/k! + g0 μ^{n+1}/(n+1)!."""
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    if len(a_seq) < n + 1:
        raise ParameterError(f"need at least {n + 1} sequence entries, got {len(a_seq)}")
    terms = [a_seq[n - k] * mu_mass**k / math.factorial(k) for k in range(n + 1)]
    terms.append(g0 * mu_mass ** (n + 1) / math.factorial(n + 1))
    return math.fsum(terms)


# -- reduced system (β = 3α) ------------------------------------------------


def m_chi_functional(s: State) -> float:
    """(m, χ)_{L²} with χ = (4 - ∂²)^{-1}u, i.e. L Σ_k w_k (1+k²)/(4+k²) |c_k|²."""
    grid = s.grid
    k2 = grid.k**2
    c = s.u.spectrum()
    return float(grid.length * np.sum(grid.parseval_weights * (1.0 + k2) / (4.0 + k2) * np.abs(c) ** 2))


def m_chi_drift(result: SimResult) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Observed change of (m, χ) since t = 0 and the accumulated source ∫(γσ², χ_x)."""
    m_chi = result.series["m_chi"]
    return m_chi - m_chi[0], np.array(result.series["int_chi_source"])


def _masses_until(ps: ParamSet, name: CoefficientName, times: NDArray[np.float64]) -> NDArray[np.float64]:
    fn = ps.functions()[name]
    return np.array([fn.l1_mass(float(t)) for t in times])


def _times(result: SimResult) -> NDArray[np.float64]:
    return np.array(result.series.t)


def lemma41_bounds(
    result: SimResult, trace: CharTrace, ps: ParamSet, s: float, cfg: TheoryConfig
) -> tuple[BoundReport, BoundReport]:
    """L² and L^∞ bounds on u for the reduced system, evaluated at the trace times."""
    del cfg  # the bounds carry no generic constant
    ps.require_reduced(horizon=max(result.final.t, 1e-12))
    times = np.array(trace.times)
    integral = np.array(trace.integral_inf_xi_ux)
    u0, sigma0 = result.initial.u, result.initial.sigma

    u0_l2 = u0.l2_norm()
    u0_inf = u0.linf_norm()
    s0_l2 = sigma0.l2_norm()
    s0_hs4 = sobolev_norm(sigma0, s - 1.0) ** 4
    gamma_mass = _masses_until(ps, "gamma", times)
    alpha_t = np.abs(ps.alpha.sample(times))
    gamma_t = np.abs(ps.gamma.sample(times))

    with np.errstate(over="ignore", invalid="ignore"):
        decay3 = np.exp(-3.0 * integral)
        l2_bound = 2.0 * u0_l2 * np.exp(2.0 * s0_hs4 * gamma_mass * decay3)
        j = 4.0 * u0_l2**2 * alpha_t * np.exp(4.0 * s0_hs4 * gamma_mass * decay3)
        j = j + s0_l2**2 * gamma_t * np.exp(-integral)
        j = np.where(alpha_t * u0_l2 + gamma_t * s0_l2 == 0.0, 0.0, j)
        linf_bound = u0_inf + times * j

    history = result.history()
    observed_l2 = np.array([history.at(float(t)).u.l2_norm() for t in times])
    observed_inf = np.array([history.at(float(t)).u.linf_norm() for t in times])
    return (
        BoundReport.compare("lemma41_l2", times, l2_bound, observed_l2),
        BoundReport.compare("lemma41_linf", times, linf_bound, observed_inf),
    )


def _safe_product(*factors: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.ones_like(factors[0])
    zero = np.zeros(factors[0].shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for f in factors:
            zero |= f == 0.0
            out = out * f
    return np.where(zero, 0.0, out)


def L_of_t(result: SimResult, ps: ParamSet, s: float, M: float) -> NDArray[np.float64]:
    """Growth allowance for sup u_x given a slope floor ``inf u_x >= -M``, at every recorded time."""
    if M < 0.0:
        raise ParameterError(f"slope floor must be >= 0, got {M}")
    ps.require_reduced(horizon=max(result.final.t, 1e-12))
    t = _times(result)
    u0, sigma0 = result.initial.u, result.initial.sigma
    u0_hs = sobolev_norm(u0, s)
    s0_hs = sobolev_norm(sigma0, s - 1.0)
    u0_l2 = u0.l2_norm()

    beta = _masses_until(ps, "beta", t)
    gamma = _masses_until(ps, "gamma", t)
    xi = _masses_until(ps, "xi", t)
    squares = beta**2 + gamma**2
    with np.errstate(over="ignore"):
        e1 = np.exp(M * xi)
        e3 = np.exp(4.0 * s0_hs**4 * gamma * np.exp(3.0 * M * xi))

    value = (
        1.5 * u0_hs * beta
        + _safe_product(np.full_like(t, 1.5 * s0_hs**2), t, e1, squares)
        + _safe_product(np.full_like(t, 6.0 * u0_l2**2), t, e3, squares)
        + _safe_product(np.full_like(t, 0.5 * s0_hs), gamma, e1)
    )
    finite = value[np.isfinite(value)]
    if finite.size > 1 and np.any(np.diff(finite) < -1e-12 * max(1.0, float(np.max(np.abs(finite))))):
        raise ArithmeticError("slope allowance is not monotone in time")
    return value


def slope_bound_report(result: SimResult, ps: ParamSet, s: float) -> BoundReport:
    """sup_x u_x(t) <= ‖∂_x u0‖_{L^∞} + 𝓛(t) with the slope floor taken from the run."""
    series = result.series
    floor = max(0.0, -float(np.min(series["inf_ux"])))
    allowance = L_of_t(result, ps, s, floor)
    start = float(series.slope_sup_norm()[0])
    return BoundReport.compare("slope_sup", _times(result), start + allowance, np.array(series["sup_ux"]))


@dataclass(frozen=True)
class WaveBreakingReport:
    """Applicability and outcome of the wave-breaking criterion for one run."""

    signs: SignVerdict
    reduced: bool
    slope_floor: float
    breaking_detected: bool
    breaking_time: float | None

    @property
    def criterion_applies(self) -> bool:
        return self.signs.holds and self.reduced

    def describe(self) -> dict[str, object]:
        return {
            "signs_hold": self.signs.holds,
            "first_sign_violation": self.signs.first_violation,
            "reduced": self.reduced,
            "criterion_applies": self.criterion_applies,
            "slope_floor": self.slope_floor,
            "breaking_detected": self.breaking_detected,
            "breaking_time": self.breaking_time,
        }


def wave_breaking_report(result: SimResult, ps: ParamSet, samples: int = 257) -> WaveBreakingReport:
    horizon = max(result.final.t, 1e-12)
    return WaveBreakingReport(
        signs=sign_check(ps, horizon, samples),
        reduced=ps.is_reduced(horizon),
        slope_floor=max(0.0, -float(np.min(result.series["inf_ux"]))),
        breaking_detected=result.verdict.kind == "blew_up",
        breaking_time=result.blowup_time,
    )
