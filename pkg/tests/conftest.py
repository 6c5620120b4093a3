"""Shared fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from wavebreak.dynamics import State
from wavebreak.params import ParamSet
from wavebreak.spectral import Field, Grid


@pytest.fixture
def grid64() -> Grid:
    return Grid(64)


@pytest.fixture
def grid128() -> Grid:
    return Grid(128)


@pytest.fixture
def smooth_state(grid128: Grid) -> State:
    """Small smooth data: u = 0.3 sin x, σ = 0.2 + 0.1 cos x."""
    u = Field.from_function(grid128, lambda x: 0.3 * np.sin(x))
    sigma = Field.from_function(grid128, lambda x: 0.2 + 0.1 * np.cos(x))
    return State(u, sigma)


@pytest.fixture
def b_family() -> ParamSet:
    return ParamSet.b_family(2.0, 1.0)


@pytest.fixture
def reduced() -> ParamSet:
    """α = ξ = 1, β = 3, γ = 1: the reduced system with β ≡ 3α."""
    return ParamSet.b_family(3.0, 1.0)
