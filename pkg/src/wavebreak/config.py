"""Run configuration: a flat YAML mapping of dotted keys validated into pydantic sections.

Example document::

    scenario: simulate
    grid.n: 256
    u.preset: gaussian-bump
    u.amplitude: 0.5
    params.preset: damped
    params.lambda: 0.5
    run.t_end: 2.0
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pydantic
import yaml

from wavebreak import initial_data
from wavebreak.dynamics import State
from wavebreak.errors import ConfigError, WavebreakError
from wavebreak.integrator import StepControl
from wavebreak.littlewood_paley import BesovSpec
from wavebreak.params import ParamFn, ParamSet
from wavebreak.spectral import Field, Grid
from wavebreak.theory import TheoryConfig

__all__ = [
    "CoefficientSection",
    "GridSection",
    "ParamsSection",
    "ProfileSection",
    "RunConfig",
    "build_grid",
    "build_initial_state",
    "build_params",
    "build_profile",
    "load_config",
    "parse_config",
]

Scenario = Literal["simulate", "transform-check", "friedrichs", "blowup-scan", "norms", "bounds-report"]
OutputFormat = Literal["series", "summary", "frames", "traces"]


class _Section(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


class GridSection(_Section):
    n: int = pydantic.Field(default=256, ge=16)
    length: float = pydantic.Field(default=2.0 * math.pi, gt=0.0, allow_inf_nan=False)

    @pydantic.field_validator("n")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v & (v - 1):
            raise ValueError(f"must be a power of two, got {v}")
        return v


class ProfileSection(_Section):
    """One initial profile; fields not used by the preset are ignored."""

    preset: Literal["zero", "constant", "gaussian-bump", "sine", "peakon-smooth", "tabulated"] = "zero"
    amplitude: float = pydantic.Field(default=1.0, allow_inf_nan=False)
    width: float = pydantic.Field(default=0.5, gt=0.0)
    center: float | None = None
    wavenumber: int = pydantic.Field(default=1, ge=1)
    sharpness: float = pydantic.Field(default=10.0, gt=0.0)
    offset: float = pydantic.Field(default=0.0, allow_inf_nan=False)
    samples: list[float] | None = None

    @pydantic.model_validator(mode="after")
    def _samples_for_table(self) -> ProfileSection:
        if self.preset == "tabulated" and not self.samples:
            raise ValueError("the tabulated preset needs samples")
        return self


class CoefficientSection(_Section):
    kind: Literal["constant", "damped_exp", "tabulated"] = "constant"
    value: float = pydantic.Field(default=0.0, allow_inf_nan=False)
    scale: float = pydantic.Field(default=0.0, allow_inf_nan=False)
    rate: float = pydantic.Field(default=1.0, gt=0.0, allow_inf_nan=False)
    times: list[float] | None = None
    values: list[float] | None = None
    nonnegative: bool | None = None

    @pydantic.model_validator(mode="after")
    def _table_for_tabulated(self) -> CoefficientSection:
        if self.kind == "tabulated" and (self.times is None or self.values is None):
            raise ValueError("a tabulated coefficient needs times and values")
        return self


class ParamsSection(_Section):
    preset: Literal["b-family", "damped", "custom"] = "b-family"
    b: float = pydantic.Field(default=2.0, allow_inf_nan=False)
    kappa: float = pydantic.Field(default=1.0, allow_inf_nan=False)
    lam: float | None = pydantic.Field(default=None, alias="lambda", gt=0.0, allow_inf_nan=False)
    damping: float = pydantic.Field(default=0.0, ge=0.0, allow_inf_nan=False)
    alpha: CoefficientSection = CoefficientSection()
    beta: CoefficientSection = CoefficientSection()
    gamma: CoefficientSection = CoefficientSection()
    xi: CoefficientSection = CoefficientSection()

    @pydantic.model_validator(mode="after")
    def _lambda_for_damped(self) -> ParamsSection:
        if self.preset == "damped" and self.lam is None:
            raise ValueError("the damped preset needs lambda")
        return self


class RunSection(_Section):
    t_end: float = pydantic.Field(default=1.0, gt=0.0, allow_inf_nan=False)
    rhs: Literal["nonlocal", "momentum"] = "nonlocal"


class FriedrichsSection(_Section):
    n_max: int = pydantic.Field(default=8, ge=1)
    n_frames: int = pydantic.Field(default=200, ge=1)
    t_end: float = pydantic.Field(default=1.0, gt=0.0, allow_inf_nan=False)


class TransformSection(_Section):
    lam: float = pydantic.Field(default=0.5, alias="lambda", gt=0.0, allow_inf_nan=False)
    t_end: float = pydantic.Field(default=1.0, gt=0.0, allow_inf_nan=False)
    tolerance: float = pydantic.Field(default=1e-5, gt=0.0)


class ScanSection(_Section):
    amplitudes: list[float] = pydantic.Field(default_factory=lambda: [1.0, 2.0, 5.0], min_length=1)


class NormsSection(_Section):
    corpus: int = pydantic.Field(default=0, ge=0)
    bandwidth: int = pydantic.Field(default=8, ge=1)


class OutputSection(_Section):
    formats: list[OutputFormat] = pydantic.Field(default_factory=lambda: ["series", "summary"])


class RunConfig(_Section):
    """Fully resolved run configuration; every default is explicit in :meth:`model_dump`."""

    scenario: Scenario = "simulate"
    grid: GridSection = GridSection()
    u: ProfileSection = ProfileSection()
    sigma: ProfileSection = ProfileSection()
    params: ParamsSection = ParamsSection()
    step: StepControl = StepControl()
    besov: BesovSpec = BesovSpec()
    theory: TheoryConfig = TheoryConfig()
    run: RunSection = RunSection()
    friedrichs: FriedrichsSection = FriedrichsSection()
    transform: TransformSection = TransformSection()
    scan: ScanSection = ScanSection()
    norms: NormsSection = NormsSection()
    output: OutputSection = OutputSection()


# -- parsing ------------------------------------------------------------------


def _field_names(model: type[pydantic.BaseModel]) -> dict[str, Any]:
    """Map accepted key (alias or name) to the field annotation."""
    out: dict[str, Any] = {}
    for name, info in model.model_fields.items():
        out[info.alias or name] = info.annotation
        out[name] = info.annotation
    return out


def _check_known(key: str, line: int | None = None) -> None:
    model: Any = RunConfig
    parts = key.split(".")
    for depth, part in enumerate(parts):
        if not (isinstance(model, type) and issubclass(model, pydantic.BaseModel)):
            raise ConfigError("too many key components", line=line, key=key)
        fields = _field_names(model)
        if part not in fields:
            raise ConfigError("unknown key", line=line, key=key)
        model = fields[part]
        if depth == len(parts) - 1 and isinstance(model, type) and issubclass(model, pydantic.BaseModel):
            raise ConfigError("a section needs a dotted field, e.g. grid.n", line=line, key=key)


def _key_lines(text: str) -> dict[str, int]:
    node = yaml.compose(text, Loader=yaml.SafeLoader)
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {str(k.value): k.start_mark.line + 1 for k, _ in node.value}


def _expand(flat: dict[str, Any], lines: dict[str, int]) -> dict[str, Any]:
    nested: dict[str, Any] = {}
    for key, value in flat.items():
        if not isinstance(key, str):
            raise ConfigError(f"keys must be strings, got {key!r}")
        if isinstance(value, dict):
            raise ConfigError("nested mappings are not allowed; use dotted keys", line=lines.get(key), key=key)
        _check_known(key, lines.get(key))
        *heads, leaf = key.split(".")
        node = nested
        for head in heads:
            node = node.setdefault(head, {})
        node[leaf] = value
    return nested


def _error_key(loc: tuple[int | str, ...]) -> str:
    return ".".join(str(p) for p in loc if not isinstance(p, int))


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    Raises:
        ConfigError: YAML syntax error (with line), unknown key or invalid value (with key).
    """
    try:
        raw = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(exc.problem or str(exc), line=mark.line + 1 if mark else None) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(str(exc)) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("the configuration must be a mapping of dotted keys")

    nested = _expand(raw, lines)
    try:
        return RunConfig.model_validate(nested)
    except pydantic.ValidationError as exc:
        err = exc.errors()[0]
        key = _error_key(err["loc"])
        raise ConfigError(err["msg"], line=lines.get(key), key=key) from exc


def load_config(path: str | Path) -> RunConfig:
    """Read a UTF-8 configuration file and parse it."""
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- building -----------------------------------------------------------------


def build_grid(cfg: RunConfig) -> Grid:
    return Grid(cfg.grid.n, cfg.grid.length)


def build_profile(grid: Grid, section: ProfileSection) -> Field:
    """Field for one profile section, including its constant offset."""
    p = section
    if p.preset == "zero":
        f = Field.zeros(grid)
    elif p.preset == "constant":
        f = initial_data.constant(grid, p.amplitude)
    elif p.preset == "gaussian-bump":
        f = initial_data.gaussian_bump(grid, p.amplitude, p.width, p.center)
    elif p.preset == "sine":
        f = initial_data.sine(grid, p.amplitude, p.wavenumber)
    elif p.preset == "peakon-smooth":
        f = initial_data.peakon_smooth(grid, p.amplitude, p.sharpness, p.center)
    else:
        f = initial_data.tabulated(grid, p.samples or [])
    return f + Field.constant(grid, p.offset) if p.offset else f


def build_initial_state(cfg: RunConfig, grid: Grid | None = None) -> State:
    g = grid or build_grid(cfg)
    return State(build_profile(g, cfg.u), build_profile(g, cfg.sigma))


def _build_coefficient(name: str, section: CoefficientSection) -> ParamFn:
    try:
        if section.kind == "constant":
            fn = ParamFn.constant(section.value)
        elif section.kind == "damped_exp":
            fn = ParamFn.damped_exp(section.scale, section.rate)
        else:
            fn = ParamFn.tabulated(np.asarray(section.times), np.asarray(section.values))
    except WavebreakError as exc:
        raise ConfigError(str(exc), key=f"params.{name}") from exc
    if section.nonnegative and not fn.nonnegative:
        raise ConfigError("declared nonnegative but takes negative values", key=f"params.{name}.nonnegative")
    return fn


def build_params(cfg: RunConfig) -> ParamSet:
    """ParamSet for the ``params`` section."""
    p = cfg.params
    if p.preset == "b-family":
        return ParamSet.b_family(p.b, p.kappa, damping=p.damping)
    if p.preset == "damped":
        assert p.lam is not None
        return ParamSet.damped(p.b, p.kappa, p.lam)
    return ParamSet(
        _build_coefficient("alpha", p.alpha),
        _build_coefficient("beta", p.beta),
        _build_coefficient("gamma", p.gamma),
        _build_coefficient("xi", p.xi),
        lam=p.lam,
        damping=p.damping,
    )
