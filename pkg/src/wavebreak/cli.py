"""Command-line entry point: ``wavebreak --config run.yaml --out results/``.

Exit status is 0 when the run completed and its checks passed, 2 when wave breaking was
detected, and 1 on any error or failed check.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from rich.console import Console
from rich.table import Table

from wavebreak.characteristics import sigma_bounds_check, sigma_invariant_error, trace
from wavebreak.config import RunConfig, build_grid, build_initial_state, build_params, load_config
from wavebreak.dynamics import State, exp_weight_transform, rescaled_time, time_rescale_transform
from wavebreak.errors import ConfigError, DivergentMassError, HypothesisError, ParameterError, WavebreakError
from wavebreak.friedrichs import cauchy_differences, distance_to_solution, iterate, lemma32_envelope
from wavebreak.initial_data import random_band_limited
from wavebreak.integrator import SimResult, simulate, theorem15_integral
from wavebreak.littlewood_paley import (
    BesovSpec,
    besov_norm,
    block_l2_energies,
    lowpass_decay_constant,
    moser_ratio,
    sobolev_norm,
)
from wavebreak.log import configure_logging, get_logger
from wavebreak.output import write_frames, write_series, write_summary, write_table, write_traces
from wavebreak.params import ParamSet
from wavebreak.spectral import Grid
from wavebreak.theory import (
    blowup_lower_bound,
    data_norm,
    h_modulus,
    lemma41_bounds,
    m_chi_drift,
    remark14_lambda_min,
    slope_bound_report,
    theorem11_check,
    theorem11_max_data_norm,
    theorem13_check,
    theorem13_max_data_norm,
    wave_breaking_report,
)

__all__ = ["build_parser", "main", "run", "scan_point_config"]

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2


@dataclass(frozen=True)
class RunContext:
    """Everything a scenario needs, resolved once from the configuration."""

    cfg: RunConfig
    out_dir: Path
    grid: Grid
    state: State
    ps: ParamSet
    seed: int
    workers: int

    def wants(self, fmt: str) -> bool:
        return fmt in self.cfg.output.formats


ScenarioFn = Callable[[RunContext], tuple[dict[str, Any], int]]


def _exit_for(result: SimResult) -> int:
    if result.verdict.kind == "blew_up":
        return EXIT_BLOWUP
    return EXIT_OK if result.verdict.completed else EXIT_ERROR


def _guarded(fn: Callable[[], Any]) -> Any:
    """Evaluate a theory quantity, recording hypothesis failures instead of aborting."""
    try:
        value = fn()
    except (HypothesisError, DivergentMassError, ParameterError) as exc:
        logger.warning("%s", exc)
        return {"error": str(exc)}
    return value.describe() if hasattr(value, "describe") else value


def _simulate(ctx: RunContext) -> SimResult:
    cfg = ctx.cfg
    return simulate(ctx.state, ctx.ps, cfg.run.t_end, cfg.step, s_norm=cfg.theory.s, rhs=cfg.run.rhs)


def _write_run(ctx: RunContext, result: SimResult) -> dict[str, Any]:
    """Write the requested per-run files and return trace diagnostics when traces are requested."""
    target = ctx.out_dir
    if ctx.wants("series"):
        write_series(result, target)
    if ctx.wants("frames"):
        write_frames(result, target)
    if not ctx.wants("traces"):
        return {}
    tr = trace(result, ctx.ps)
    write_traces(tr, target)
    bounds = sigma_bounds_check(result, tr)
    return {
        "sigma_invariant_error": sigma_invariant_error(result, tr),
        "sigma_linf_bound_holds": bounds.linf_holds,
        "sigma_l2_bound_holds": bounds.l2_holds,
        "min_jacobian": float(np.min(tr.jacobians)),
    }


def _run_summary(result: SimResult, ps: ParamSet) -> dict[str, Any]:
    return {
        "verdict": result.verdict.describe(),
        "final_time": result.final.t,
        "steps": len(result.series) - 1,
        "blowup_time": result.blowup_time,
        "theorem15_integral": theorem15_integral(result, ps),
        "wave_breaking": wave_breaking_report(result, ps).describe(),
    }


# -- scenarios ------------------------------------------------------------------


def _scenario_simulate(ctx: RunContext) -> tuple[dict[str, Any], int]:
    result = _simulate(ctx)
    summary = _run_summary(result, ctx.ps)
    summary["blowup_lower_bound"] = _guarded(
        lambda: blowup_lower_bound(ctx.state.u, ctx.state.sigma, ctx.cfg.theory.s, ctx.ps, ctx.cfg.theory)
    )
    summary["traces"] = _write_run(ctx, result)
    return summary, _exit_for(result)


def _scenario_transform_check(ctx: RunContext) -> tuple[dict[str, Any], int]:
    cfg = ctx.cfg
    lam, t_end = cfg.transform.lam, cfg.transform.t_end
    b, kappa = cfg.params.b, cfg.params.kappa
    s0 = ctx.state

    def run_to(ps: ParamSet, horizon: float) -> SimResult:
        return simulate(s0, ps, horizon, cfg.step, s_norm=cfg.theory.s, rhs=cfg.run.rhs)

    damped_ps = ParamSet.b_family(b, kappa, damping=lam)
    damped = run_to(damped_ps, t_end)
    undamped = run_to(ParamSet.b_family(b, kappa), rescaled_time(lam, t_end))
    weighted = run_to(ParamSet.damped(b, kappa, lam), t_end)
    runs = {"damped": damped, "undamped": undamped, "weighted": weighted}
    failed = [name for name, r in runs.items() if not r.verdict.completed]
    summary: dict[str, Any] = {name: r.verdict.describe() for name, r in runs.items()}
    if failed:
        logger.error("transform check needs completed runs; %s did not complete", ", ".join(failed))
        return summary, EXIT_ERROR

    target = damped.final
    rescaled = time_rescale_transform(undamped.history(), lam, t_end)
    unweighted = exp_weight_transform(weighted.final, lam, "inverse")

    def gap(s: State) -> float:
        return max((s.u - target.u).linf_norm(), (s.sigma - target.sigma).linf_norm())

    summary.update(
        time_rescale_discrepancy=gap(rescaled),
        exp_weight_discrepancy=gap(unweighted),
        tolerance=cfg.transform.tolerance,
    )
    passed = summary["time_rescale_discrepancy"] <= cfg.transform.tolerance
    passed = passed and summary["exp_weight_discrepancy"] <= cfg.transform.tolerance
    summary["passed"] = passed
    _write_run(ctx, damped)
    if not passed:
        logger.error("transform discrepancy exceeds %.3g", cfg.transform.tolerance)
    return summary, EXIT_OK if passed else EXIT_ERROR


def _scenario_friedrichs(ctx: RunContext) -> tuple[dict[str, Any], int]:
    cfg = ctx.cfg
    fc = cfg.friedrichs
    u0, sigma0 = ctx.state.u, ctx.state.sigma
    records = iterate(u0, sigma0, ctx.ps, cfg.besov, fc.t_end, fc.n_max, n_frames=fc.n_frames)

    h0 = data_norm(u0, sigma0, cfg.besov)
    summary: dict[str, Any] = {
        "data_norm": h0,
        "sup_H": [float(np.max(r.H_series)) for r in records],
        "uniform_bound": _guarded(lambda: 2.0 * h_modulus(h0, ctx.ps, cfg.theory)),
        "theorem11": _guarded(lambda: theorem11_check(u0, sigma0, cfg.besov, ctx.ps, cfg.theory)),
    }

    columns = ["t", *(f"H_{r.n}" for r in records)]
    table = np.column_stack([records[0].times, *(r.H_series for r in records)])
    write_table(ctx.out_dir / "iterates.csv", columns, table)

    if len(records) > 1:
        diffs = cauchy_differences(records, 1)
        envelope = lemma32_envelope(diffs, ctx.ps, fc.t_end)
        summary["cauchy_sup"] = diffs.sup
        summary["cauchy_envelope"] = envelope
        summary["cauchy_ratios"] = diffs.ratios()
        cauchy = np.column_stack([diffs.indices, diffs.sup, envelope])
        write_table(ctx.out_dir / "cauchy.csv", ("n", "sup_H_diff", "envelope"), cauchy)

    reference = simulate(ctx.state, ctx.ps, fc.t_end, cfg.step, s_norm=cfg.theory.s, rhs=cfg.run.rhs)
    summary["reference_verdict"] = reference.verdict.describe()
    if reference.verdict.completed:
        summary["distance_to_solution"] = distance_to_solution(records[-1], reference)
    _write_run(ctx, reference)
    return summary, EXIT_OK


def scan_point_config(cfg_dump: dict[str, Any], amplitude: float) -> RunConfig:
    """The run configuration of one scan point, validated with its amplitude in place."""
    return RunConfig.model_validate({**cfg_dump, "u": {**cfg_dump["u"], "amplitude": amplitude}})


def _scan_one(cfg_dump: dict[str, Any], amplitude: float, out_dir: str) -> dict[str, Any]:
    """One blow-up scan point; runs in a worker process and owns ``out_dir``."""
    cfg = scan_point_config(cfg_dump, amplitude)
    grid = build_grid(cfg)
    state = build_initial_state(cfg, grid)
    ps = build_params(cfg)
    result = simulate(state, ps, cfg.run.t_end, cfg.step, s_norm=cfg.theory.s, rhs=cfg.run.rhs)
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    if "series" in cfg.output.formats:
        write_series(result, target)

    point = {"amplitude": amplitude, **_run_summary(result, ps)}
    try:
        bound = blowup_lower_bound(state.u, state.sigma, cfg.theory.s, ps, cfg.theory)
    except HypothesisError as exc:
        point["blowup_lower_bound"] = {"error": str(exc)}
    else:
        point["blowup_lower_bound"] = bound.describe()
        if result.blowup_time is not None:
            point["blowup_after_lower_bound"] = result.blowup_time >= bound.time
    return point


def _scenario_blowup_scan(ctx: RunContext) -> tuple[dict[str, Any], int]:
    amplitudes = ctx.cfg.scan.amplitudes
    dump = ctx.cfg.model_dump(by_alias=True)
    dirs = [str(ctx.out_dir / f"amplitude_{i:03d}") for i in range(len(amplitudes))]
    dumps = [dump] * len(amplitudes)
    logger.info("scanning %d amplitudes with %d worker(s)", len(amplitudes), ctx.workers)
    if ctx.workers > 1:
        with ProcessPoolExecutor(max_workers=ctx.workers) as pool:
            points = list(pool.map(_scan_one, dumps, amplitudes, dirs))
    else:
        points = [_scan_one(d, a, o) for d, a, o in zip(dumps, amplitudes, dirs, strict=True)]

    kinds = [p["verdict"]["kind"] for p in points]
    consistent = all(p.get("blowup_after_lower_bound", True) for p in points)
    summary = {"points": points, "lower_bound_consistent": consistent}
    if not consistent:
        logger.error("a numerical blow-up time fell below its lower bound")
        return summary, EXIT_ERROR
    if "blew_up" in kinds:
        return summary, EXIT_BLOWUP
    return summary, EXIT_OK if all(k == "completed" for k in kinds) else EXIT_ERROR


def _stats(values: list[float]) -> dict[str, float]:
    arr = np.array(values)
    return {"min": float(arr.min()), "max": float(arr.max()), "mean": float(arr.mean())}


def _scenario_norms(ctx: RunContext) -> tuple[dict[str, Any], int]:
    cfg = ctx.cfg
    spec = cfg.besov
    u0, sigma0 = ctx.state.u, ctx.state.sigma
    summary: dict[str, Any] = {
        "besov_u": besov_norm(u0, spec),
        "besov_sigma": besov_norm(sigma0, spec.shifted(-1.0)),
        "sobolev_u": sobolev_norm(u0, spec.s),
        "sobolev_sigma": sobolev_norm(sigma0, spec.s - 1.0),
        "lowpass_decay_u": lowpass_decay_constant(u0, spec.s),
    }
    energies_u, energies_sigma = block_l2_energies(u0), block_l2_energies(sigma0)
    q = np.arange(-1, energies_u.size - 1)
    write_table(ctx.out_dir / "blocks.csv", ("q", "u", "sigma"), np.column_stack([q, energies_u, energies_sigma]))

    if cfg.norms.corpus:
        rng = np.random.default_rng(ctx.seed)
        sobolev_spec = BesovSpec(s=spec.s, p=2.0, r=2.0)
        moser, equivalence = [], []
        for _ in range(cfg.norms.corpus):
            f = random_band_limited(ctx.grid, rng, cfg.norms.bandwidth)
            g = random_band_limited(ctx.grid, rng, cfg.norms.bandwidth)
            moser.append(moser_ratio(f, g, spec.s - 1.0, spec.s, spec.p, spec.r))
            equivalence.append(besov_norm(f, sobolev_spec) / sobolev_norm(f, spec.s))
        summary["corpus"] = {
            "size": cfg.norms.corpus,
            "moser_ratio": _stats(moser),
            "besov_sobolev_ratio": _stats(equivalence),
        }
    return summary, EXIT_OK


def _scenario_bounds_report(ctx: RunContext) -> tuple[dict[str, Any], int]:
    cfg = ctx.cfg
    th = cfg.theory
    u0, sigma0 = ctx.state.u, ctx.state.sigma
    ps = ctx.ps
    b, kappa = cfg.params.b, cfg.params.kappa
    lam = cfg.params.lam or cfg.params.damping or None

    summary: dict[str, Any] = {
        "theorem11": _guarded(lambda: theorem11_check(u0, sigma0, cfg.besov, ps, th)),
        "theorem11_max_data_norm": _guarded(lambda: theorem11_max_data_norm(ps, th)),
        "blowup_lower_bound": _guarded(lambda: blowup_lower_bound(u0, sigma0, th.s, ps, th)),
        "remark14_lambda_min": _guarded(lambda: remark14_lambda_min(u0, sigma0, cfg.besov, b, kappa, th)),
    }
    if lam is not None:
        summary["theorem13"] = _guarded(lambda: theorem13_check(u0, sigma0, cfg.besov, b, kappa, lam, th))
        summary["theorem13_max_data_norm"] = theorem13_max_data_norm(lam, b, kappa, th)

    result = _simulate(ctx)
    summary["run"] = _run_summary(result, ps)
    summary["traces"] = _write_run(ctx, result)
    if ps.is_reduced(max(result.final.t, 1e-12)):
        tr = trace(result, ps)
        l2, linf = lemma41_bounds(result, tr, ps, th.s, th)
        drift, predicted = m_chi_drift(result)
        summary["lemma41_l2"] = l2.describe()
        summary["lemma41_linf"] = linf.describe()
        summary["slope_bound"] = _guarded(lambda: slope_bound_report(result, ps, th.s))
        summary["m_chi_identity_error"] = float(np.max(np.abs(drift - predicted)))
    return summary, _exit_for(result)


SCENARIOS: dict[str, ScenarioFn] = {
    "simulate": _scenario_simulate,
    "transform-check": _scenario_transform_check,
    "friedrichs": _scenario_friedrichs,
    "blowup-scan": _scenario_blowup_scan,
    "norms": _scenario_norms,
    "bounds-report": _scenario_bounds_report,
}


# -- entry points ---------------------------------------------------------------


def _render(summary: dict[str, Any], status: int, console: Console) -> None:
    table = Table(title=f"wavebreak: exit {status}")
    table.add_column("key", style="cyan")
    table.add_column("value")
    for key, value in summary.items():
        if isinstance(value, dict | list | np.ndarray) or key == "config":
            continue
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)


def run(
    cfg: RunConfig, out_dir: Path, *, workers: int = 1, seed: int = 0, console: Console | None = None
) -> int:
    """Run the configured scenario, write its files under ``out_dir`` and return the exit status.

    With a ``console`` the scalar results are also shown as a table.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = build_grid(cfg)
    ctx = RunContext(cfg, out_dir, grid, build_initial_state(cfg, grid), build_params(cfg), seed, max(1, workers))
    logger.info("scenario %s on %d points", cfg.scenario, grid.n_points)
    results, status = SCENARIOS[cfg.scenario](ctx)
    summary = {"scenario": cfg.scenario, "exit_status": status, "seed": seed, **results}
    summary["config"] = cfg.model_dump(by_alias=True)
    if ctx.wants("summary"):
        write_summary(summary, out_dir)
    if console is not None:
        _render(summary, status, console)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavebreak", description="Simulate and verify the perturbed b-family system.")
    parser.add_argument("--config", required=True, type=Path, help="YAML document of dotted keys")
    parser.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
    parser.add_argument("--seed", type=int, default=0, help="seed for random corpora (default: 0)")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for blowup-scan (default: 1)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log every step")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    console = Console(stderr=True)
    configure_logging(level, console=console)
    try:
        cfg = load_config(args.config)
        status = run(cfg, args.out, workers=args.workers, seed=args.seed, console=None if args.quiet else console)
    except ConfigError as exc:
        logger.error("invalid configuration %s: %s", args.config, exc)
        return EXIT_ERROR
    except (WavebreakError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_ERROR
    logger.info("exit status %d; results in %s", status, args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
