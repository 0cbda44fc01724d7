"""Shared helpers: small grids and randomized smooth test fields."""

import numpy as np
import pytest

from dnls import Field, GridSpec


def band_limited_field(rng, d=1, n=512, half_width=30.0, max_wavenumber=2.0):
    """Random smooth packet: a few plane waves under a Gaussian envelope with
    randomized width and center, kept well inside the box so periodic
    truncation effects stay at roundoff."""
    grid = GridSpec(d, n, half_width)
    coords = grid.coords()
    envelope_width = rng.uniform(0.5, 0.1 * half_width)
    center = rng.uniform(-0.1 * half_width, 0.1 * half_width, size=d)
    sq = sum((x - c) ** 2 for x, c in zip(coords, center))
    profile = np.zeros(grid.shape, dtype=complex)
    for _ in range(int(rng.integers(1, 6))):
        amp = rng.normal() + 1j * rng.normal()
        wave = sum(rng.uniform(-max_wavenumber, max_wavenumber) * x for x in coords)
        profile += amp * np.exp(1j * wave)
    return Field(grid, profile * np.exp(-sq / (2.0 * envelope_width ** 2)))


@pytest.fixture
def grid1d():
    return GridSpec(1, 1024, 20.0)


@pytest.fixture
def grid2d():
    return GridSpec(2, 128, 20.0)
