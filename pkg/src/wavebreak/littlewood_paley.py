"""Dyadic frequency blocks, low-pass projections and Besov/Sobolev norms on the torus.

Blocks use sharp cutoffs on the integer wavenumber index j (units of 2π/L):

    Δ_{-1}: j <= 1,    Δ_q: 2^q <= j < 2^{q+1}  (q >= 0).

The band of Δ_0 holds only j = 1, which already belongs to Δ_{-1}, so Δ_0 is always
empty and the blocks are exactly disjoint.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pydantic
from numpy.typing import NDArray

from wavebreak.errors import ParameterError
from wavebreak.spectral import Field, Grid, dealiased_product

__all__ = [
    "BesovSpec",
    "DyadicDecomposition",
    "besov_norm",
    "block_l2_energies",
    "decompose",
    "low_pass",
    "lowpass_decay_constant",
    "moser_ratio",
    "q_max",
    "sobolev_norm",
]


class BesovSpec(pydantic.BaseModel):
    """Selects the norm of B^s_{p,r}; ``p`` and ``r`` may be ``inf``."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    s: float = pydantic.Field(default=2.0, allow_inf_nan=False)
    p: float = pydantic.Field(default=2.0, ge=1.0)
    r: float = pydantic.Field(default=2.0, ge=1.0)

    def shifted(self, ds: float) -> BesovSpec:
        """Same (p, r) with regularity s + ds."""
        return self.model_copy(update={"s": self.s + ds})


def q_max(grid: Grid) -> int:
    """Index of the highest block, ⌈log2(n/2)⌉."""
    return math.ceil(math.log2(grid.n_points // 2))


@lru_cache(maxsize=64)
def _block_masks(grid: Grid) -> tuple[NDArray[np.bool_], ...]:
    j = grid.index
    masks = [j <= 1]
    for q in range(q_max(grid) + 1):
        masks.append((j >= max(2**q, 2)) & (j < 2 ** (q + 1)))
    for m in masks:
        m.setflags(write=False)
    return tuple(masks)


def _project(f: Field, mask: NDArray[np.bool_]) -> Field:
    c = f.spectrum()
    c[~mask] = 0.0
    return Field.from_spectrum(f.grid, c)


@dataclass(frozen=True)
class DyadicDecomposition:
    """Blocks Δ_q f for q = -1 .. q_max, stored at list position q + 1."""

    grid: Grid
    blocks: tuple[Field, ...]

    @property
    def q_max(self) -> int:
        return len(self.blocks) - 2

    def block(self, q: int) -> Field:
        if not -1 <= q <= self.q_max:
            raise ParameterError(f"block index {q} outside [-1, {self.q_max}]")
        return self.blocks[q + 1]

    def reconstruct(self) -> Field:
        return Field(self.grid, np.sum([b.values for b in self.blocks], axis=0))


def decompose(f: Field) -> DyadicDecomposition:
    return DyadicDecomposition(f.grid, tuple(_project(f, m) for m in _block_masks(f.grid)))


def low_pass(f: Field, q: int) -> Field:
    """S_q f: keeps |j| < 2^q for q >= 1, and Δ_{-1} (|j| <= 1) for q = 0."""
    if q < 0:
        raise ParameterError(f"low-pass index must be >= 0, got {q}")
    j = f.grid.index
    mask = j <= 1 if q == 0 else j < 2**q
    if np.all(mask):
        return f
    return _project(f, mask)


def _lp_norm(values: NDArray[np.float64], p: float, dx: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(values)))
    return float((np.sum(np.abs(values) ** p) * dx) ** (1.0 / p))


def _lr_norm(seq: NDArray[np.float64], r: float) -> float:
    if math.isinf(r):
        return float(np.max(seq))
    return float(np.sum(seq**r) ** (1.0 / r))


def besov_norm(f: Field, spec: BesovSpec) -> float:
    """‖(2^{qs} ‖Δ_q f‖_{L^p})_{q >= -1}‖_{l^r} with discrete L^p norms."""
    dec = decompose(f)
    dx = f.grid.dx
    weights = 2.0 ** (spec.s * np.arange(-1, dec.q_max + 1))
    seq = np.array([_lp_norm(b.values, spec.p, dx) for b in dec.blocks]) * weights
    return _lr_norm(seq, spec.r)


def sobolev_norm(f: Field, s: float) -> float:
    """(L Σ_k w_k (1 + k²)^s |c_k|²)^{1/2}; equals the discrete L2 norm at s = 0."""
    grid = f.grid
    c = f.spectrum()
    total = grid.length * np.sum(grid.parseval_weights * (1.0 + grid.k**2) ** s * np.abs(c) ** 2)
    return float(np.sqrt(total))


def block_l2_energies(f: Field) -> NDArray[np.float64]:
    """Discrete L2 norm of each block, q = -1 .. q_max."""
    return np.array([b.l2_norm() for b in decompose(f).blocks])


def moser_ratio(f: Field, g: Field, s1: float, s2: float, p: float, r: float) -> float:
    """‖fg‖_{B^{s1}} / (‖f‖_{B^{s1}} ‖g‖_{B^{s2}}), a boundedness diagnostic for products."""
    spec1 = BesovSpec(s=s1, p=p, r=r)
    nf = besov_norm(f, spec1)
    ng = besov_norm(g, BesovSpec(s=s2, p=p, r=r))
    if nf == 0.0 or ng == 0.0:
        raise ParameterError("moser_ratio needs nonzero factors")
    return besov_norm(dealiased_product(f, g), spec1) / (nf * ng)


def lowpass_decay_constant(f: Field, s: float, n_values: Iterable[int] | None = None) -> float:
    """max_n 2^n ‖S_{n+1} f - f‖_{B^{s-1}_{2,2}} / ‖f‖_{B^s_{2,2}}."""
    top = besov_norm(f, BesovSpec(s=s))
    if top == 0.0:
        return 0.0
    lower = BesovSpec(s=s - 1.0)
    ns = range(q_max(f.grid) + 1) if n_values is None else n_values
    return max((2.0**n * besov_norm(low_pass(f, n + 1) - f, lower) / top for n in ns), default=0.0)
