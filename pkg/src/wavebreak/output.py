"""Result files: series.csv, frames.csv, traces.csv and summary.json.

CSV floats are written with 17 significant digits and JSON floats with their shortest
round-tripping repr, so files round-trip exactly and identical runs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from wavebreak.characteristics import CharTrace
from wavebreak.integrator import SERIES_COLUMNS, SimResult

__all__ = ["dumps", "write_frames", "write_series", "write_summary", "write_table", "write_traces"]

FLOAT_FORMAT = "%.17g"


def _plain(obj: Any) -> Any:
    """Python values for ``json``: numpy scalars and arrays unwrapped, non-finite floats as strings."""
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, bool | np.bool_):
        return bool(obj)
    if isinstance(obj, int | np.integer):
        return int(obj)
    if isinstance(obj, float | np.floating):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, Sequence):
        return [_plain(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with non-finite values as the strings "inf", "-inf", "nan"."""
    return json.dumps(_plain(obj), indent=indent, allow_nan=False)


def write_table(path: Path, columns: Sequence[str], table: np.ndarray) -> Path:
    """CSV with a header row and 17-digit floats."""
    np.savetxt(path, table, fmt=FLOAT_FORMAT, delimiter=",", header=",".join(columns), comments="")
    return path


def write_series(result: SimResult, out_dir: Path, name: str = "series.csv") -> Path:
    """One row per recorded step, columns in the fixed order of :data:`SERIES_COLUMNS`."""
    table = np.column_stack([result.series[c] for c in SERIES_COLUMNS])
    return write_table(out_dir / name, SERIES_COLUMNS, table)


def write_frames(result: SimResult, out_dir: Path, name: str = "frames.csv") -> Path:
    """Long format: one row per (frame, grid point) with t, x, u, sigma."""
    x = result.initial.grid.x
    blocks = [np.column_stack([np.full(x.size, f.t), x, f.u.values, f.sigma.values]) for f in result.frames]
    return write_table(out_dir / name, ("t", "x", "u", "sigma"), np.vstack(blocks))


def write_traces(trace: CharTrace, out_dir: Path, name: str = "traces.csv") -> Path:
    """Long format: one row per (frame, seed) with the position and both Jacobian estimates."""
    n_times, n_seeds = trace.unwrapped.shape
    table = np.column_stack(
        [
            np.repeat(trace.times, n_seeds),
            np.tile(trace.seeds, n_times),
            trace.positions.ravel(),
            trace.unwrapped.ravel(),
            trace.jacobians.ravel(),
            trace.jacobians_fd.ravel(),
        ]
    )
    return write_table(out_dir / name, ("t", "x0", "psi", "psi_unwrapped", "psi_x", "psi_x_fd"), table)


def write_summary(summary: Mapping[str, Any], out_dir: Path, name: str = "summary.json") -> Path:
    path = out_dir / name
    path.write_text(dumps(summary) + "\n", encoding="utf-8")
    return path
