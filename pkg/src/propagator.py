"""
Propagator
The exact Dirac-Coulomb flow, applied channelwise in spectral space:
u(t) = P^-1 [exp(i t rho sigma3) P u0].
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from src.eigen import WaveIndex
from src.error_handler import DataValidationError
from src.hankel import DEFAULT_RHO_WINDOW, MIN_ORDER, HankelTransformer, SpectralField
from src.logging_utils import log_event
from src.partialwave import PartialWaveField, RadialGrid, dilate
from src.performance_monitor import time_operation

logger = logging.getLogger(__name__)

DEFAULT_TIME_WINDOW = (0.0, 1.0)
DEFAULT_TIME_NODES = 65

SpectralProfile = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def default_times(window: tuple[float, float] = DEFAULT_TIME_WINDOW, nodes: int = DEFAULT_TIME_NODES) -> np.ndarray:
    return np.linspace(window[0], window[1], nodes)


def smooth_bump(a: float, b: float) -> Callable[[np.ndarray], np.ndarray]:
    """max(exp(-18 s^2) - exp(-18), 0) with s mapping [a, b] onto [-1, 1]."""
    if not 0 < a < b:
        raise DataValidationError("bump support needs 0 < a < b", details={"a": a, "b": b})

    def bump(x: np.ndarray) -> np.ndarray:
        s = (2.0 * np.asarray(x, dtype=float) - a - b) / (b - a)
        return np.maximum(np.exp(-18.0 * s * s) - math.exp(-18.0), 0.0)

    return bump


def bump_profile(a: float, b: float, component: int = 1) -> SpectralProfile:
    """A smooth bump in one energy component, zero in the other."""
    bump = smooth_bump(a, b)

    def profile(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        values = bump(rho).astype(complex)
        zeros = np.zeros_like(values)
        return (values, zeros) if component == 1 else (zeros, values)

    return profile


def _same_grid(a: RadialGrid, b: RadialGrid) -> bool:
    return a is b or (a.size == b.size and np.array_equal(a.nodes, b.nodes))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States of one flow on an ascending time grid; all states share grid and channel set."""

    times: np.ndarray
    states: Sequence[PartialWaveField]
    provenance: str = "linear"

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states) or len(self.states) == 0:
            raise DataValidationError(
                "a trajectory needs one state per time node",
                details={"times": len(self.times), "states": len(self.states)},
            )
        if np.any(np.diff(self.times) <= 0):
            raise DataValidationError("trajectory times must be strictly ascending")
        if self.provenance not in ("linear", "nonlinear"):
            raise DataValidationError(f"unknown provenance {self.provenance!r}")
        first = self.states[0]
        for state in self.states[1:]:
            if not _same_grid(state.grid, first.grid) or set(state.channels) != set(first.channels):
                raise DataValidationError("trajectory states must share grid and channel set")

    @property
    def n(self) -> int:
        return self.states[0].n

    @property
    def grid(self) -> RadialGrid:
        return self.states[0].grid

    @property
    def indices(self) -> list[WaveIndex]:
        return self.states[0].indices

    def __len__(self) -> int:
        return len(self.states)

    def profile_array(self, index: WaveIndex) -> np.ndarray:
        """Profiles of a channel as an array of shape (T, 2, R)."""
        return np.stack([np.stack(state.channels[index]) for state in self.states])

    def scaled(self, factor: complex) -> Trajectory:
        return Trajectory(self.times, [s.scaled(factor) for s in self.states], self.provenance)

    def save(self, path: str | Path) -> None:
        """Write an index file plus one sidecar document per time node next to it."""
        index_path = Path(path)
        index_path.parent.mkdir(parents=True, exist_ok=True)
        entries = []
        for i, (t, state) in enumerate(zip(self.times, self.states)):
            sidecar = f"{index_path.stem}_state_{i:04d}.json"
            state.save(index_path.parent / sidecar)
            entries.append({"t": float(t), "state": sidecar})
        with open(index_path, "w", encoding="utf-8") as f:
            json.dump({"provenance": self.provenance, "n": self.n, "entries": entries}, f, indent=2)

    @classmethod
    def load(cls, path: str | Path) -> Trajectory:
        index_path = Path(path)
        with open(index_path, "r", encoding="utf-8") as f:
            payload = json.load(f)
        entries = payload["entries"]
        states = [PartialWaveField.load(index_path.parent / e["state"]) for e in entries]
        return cls(np.array([e["t"] for e in entries]), states, payload.get("provenance", "linear"))


def dilate_trajectory(traj: Trajectory, factor: float) -> Trajectory:
    """u_lambda(t, x) = lambda^(-n/2) u(t / lambda, x / lambda)."""
    return Trajectory(traj.times * factor, [dilate(s, factor) for s in traj.states], traj.provenance)


def spectral_grid(
    r_grid: RadialGrid, rho_window: tuple[float, float] = DEFAULT_RHO_WINDOW, order: int = MIN_ORDER
) -> RadialGrid:
    """Energy grid whose panels resolve oscillation up to r_max."""
    return RadialGrid.gauss_panels(rho_window[0], rho_window[1], math.pi / r_grid.r_max, order)


class Propagator:
    """e^{itD_nu} on fields over a fixed radial grid."""

    def __init__(self, transformer: HankelTransformer):
        self.transformer = transformer

    @classmethod
    def for_field(
        cls,
        u0: PartialWaveField,
        nu: float,
        rho_grid: RadialGrid | None = None,
        tail_tolerance: float | None = 1e-10,
    ) -> Propagator:
        rho_grid = rho_grid or spectral_grid(u0.grid)
        return cls(HankelTransformer(u0.n, nu, u0.grid, rho_grid, tail_tolerance=tail_tolerance))

    @property
    def nu(self) -> float:
        return self.transformer.nu

    def spectral(self, u0: PartialWaveField) -> SpectralField:
        with time_operation("forward_transform", {"channels": len(u0.channels)}):
            return self.transformer.forward_field(u0)

    def physical(self, sf: SpectralField) -> PartialWaveField:
        with time_operation("inverse_transform", {"channels": len(sf.channels)}):
            return self.transformer.inverse_field(sf)

    def phase(self, sf: SpectralField, t: float) -> SpectralField:
        """Multiply g+ by e^{i t rho} and g- by e^{-i t rho}."""
        forward_phase = np.exp(1j * t * sf.grid.nodes)
        return sf.with_channels(
            {i: (forward_phase * p, np.conj(forward_phase) * m) for i, (p, m) in sf.channels.items()}
        )

    def evolve(self, u0: PartialWaveField, t: float) -> PartialWaveField:
        return self.physical(self.phase(self.spectral(u0), t))

    def evolve_trajectory(self, u0: PartialWaveField, times: Sequence[float] | np.ndarray) -> Trajectory:
        """One forward transform, then phases and an inverse transform per time node."""
        times = np.asarray(times, dtype=float)
        spectral = self.spectral(u0)
        with time_operation("evolve_trajectory", {"nodes": int(times.size)}):
            states = [self.physical(self.phase(spectral, float(t))) for t in times]
        log_event(
            logger,
            "evolve_trajectory",
            "complete",
            level=logging.DEBUG,
            nodes=int(times.size),
            channels=len(u0.channels),
            nu=self.nu,
        )
        return Trajectory(times, states, "linear")


def evolve(u0: PartialWaveField, nu: float, t: float, rho_grid: RadialGrid | None = None) -> PartialWaveField:
    return Propagator.for_field(u0, nu, rho_grid).evolve(u0, t)


def evolve_trajectory(
    u0: PartialWaveField,
    nu: float,
    times: Sequence[float] | np.ndarray | None = None,
    rho_grid: RadialGrid | None = None,
) -> Trajectory:
    return Propagator.for_field(u0, nu, rho_grid).evolve_trajectory(u0, default_times() if times is None else times)


def band_limited_datum(
    index: WaveIndex,
    nu: float,
    profile: SpectralProfile,
    support: tuple[float, float],
    r_grid: RadialGrid,
    rho_grid: RadialGrid | None = None,
    transformer: HankelTransformer | None = None,
) -> PartialWaveField:
    """
    The single-channel field whose transform is `profile` on [a, b] and zero elsewhere.

    Raises:
        DataValidationError: support not 0 < a < b
    """
    a, b = support
    if not 0 < a < b:
        raise DataValidationError("support needs 0 < a < b", details={"support": list(support)})
    if transformer is None:
        transformer = HankelTransformer(index.n, nu, r_grid, rho_grid or spectral_grid(r_grid))
    rho = transformer.rho_grid.nodes
    plus, minus = profile(rho)
    inside = (rho >= a) & (rho <= b)
    plus = np.where(inside, np.asarray(plus, dtype=complex), 0.0)
    minus = np.where(inside, np.asarray(minus, dtype=complex), 0.0)
    sf = SpectralField(index.n, transformer.rho_grid, {index: (plus, minus)})
    return transformer.inverse_field(sf)
