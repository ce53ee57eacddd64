"""Shared grids and band-limited data for the transform, propagator and norm tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import pytest

from src.eigen import WaveIndex
from src.hankel import HankelTransformer
from src.partialwave import PartialWaveField, RadialGrid
from src.propagator import Propagator, band_limited_datum, bump_profile, spectral_grid

SUPPORT = (0.25, 1.75)
NU = 0.5


@dataclass
class BandLimitedSetup:
    index: WaveIndex
    transformer: HankelTransformer
    propagator: Propagator
    datum: PartialWaveField
    support: tuple[float, float] = SUPPORT

    @property
    def r_grid(self) -> RadialGrid:
        return self.transformer.r_grid

    @property
    def rho_grid(self) -> RadialGrid:
        return self.transformer.rho_grid


@pytest.fixture(scope="session")
def band_limited() -> BandLimitedSetup:
    """A unit-norm 3D datum in the k = 1 channel whose transform is a bump on SUPPORT."""
    r_grid = RadialGrid.gauss_panels(1e-4, 50.0, math.pi / 2.0, 8)
    rho_grid = spectral_grid(r_grid, (1e-3, 2.0), 8)
    transformer = HankelTransformer(3, NU, r_grid, rho_grid)
    index = WaveIndex(3, 1, 0.5)
    datum = band_limited_datum(index, NU, bump_profile(*SUPPORT), SUPPORT, r_grid, transformer=transformer)
    datum = datum.scaled(1.0 / datum.norm())
    return BandLimitedSetup(index, transformer, Propagator(transformer), datum)
