"""Wavebreak - pseudospectral simulation and verification of the perturbed two-component b-family system."""

from __future__ import annotations

import importlib
from typing import Any

__version__ = "0.1.0"

# Public name -> defining submodule. Resolved on first access so that
# ``import wavebreak`` does not pull in numpy, scipy or pydantic.
_EXPORTS: dict[str, str] = {
    "Grid": "spectral",
    "Field": "spectral",
    "FieldHistory": "spectral",
    "ParamFn": "params",
    "ParamSet": "params",
    "State": "dynamics",
    "StateHistory": "dynamics",
    "StepControl": "integrator",
    "SimResult": "integrator",
    "simulate": "integrator",
    "BesovSpec": "littlewood_paley",
    "besov_norm": "littlewood_paley",
    "sobolev_norm": "littlewood_paley",
    "CharTrace": "characteristics",
    "trace": "characteristics",
    "TheoryConfig": "theory",
    "iterate": "friedrichs",
    "RunConfig": "config",
    "parse_config": "config",
    "load_config": "config",
}

__all__ = ["__version__", *_EXPORTS]


def __getattr__(name: str) -> Any:
    """Lazy load public names from their submodules."""
    try:
        module_name = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module 'wavebreak' has no attribute {name!r}") from None
    value = getattr(importlib.import_module(f"wavebreak.{module_name}"), name)
    globals()[name] = value
    return value
