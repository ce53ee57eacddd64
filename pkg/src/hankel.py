"""
Relativistic Hankel Transform
Oscillatory-kernel quadrature between radial profiles and energy profiles, per channel.

With kappa_n = 2^((n-2)/2) / sqrt(pi) and mu_i = w_i r_i^(n-1):

    g+(rho) = kappa_n sum_i [F+(rho r_i) f+(r_i) + G+(rho r_i) f-(r_i)] mu_i
    g-(rho) = kappa_n sum_i [F-(rho r_i) f+(r_i) + G-(rho r_i) f-(r_i)] mu_i

and the inverse uses the transposed kernel over the rho grid.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from src.cache_manager import CacheManager
from src.eigen import EigenChannel, WaveIndex, eval_psi_array, make_channel
from src.error_handler import DataValidationError, TruncationError
from src.logging_utils import log_event
from src.partialwave import ChannelField, PartialWaveField, RadialGrid, apply_radial_dirac
from src.performance_monitor import time_operation

logger = logging.getLogger(__name__)

MIN_ORDER = 8
DEFAULT_TAIL_TOLERANCE = 1e-10
DEFAULT_R_WINDOW = (1e-4, 400.0)
DEFAULT_RHO_WINDOW = (1e-3, 1.25)


def transform_constant(n: int) -> float:
    return 2.0 ** ((n - 2) / 2.0) / math.sqrt(math.pi)


class SpectralField(ChannelField):
    """Energy-side channel profiles; g_plus is the positive-energy component."""

    GRID_KEY = "rho_grid"

    @property
    def rho_grid(self) -> RadialGrid:
        return self.grid


def tail_fraction(grid: RadialGrid, plus: np.ndarray, minus: np.ndarray, n: int) -> float:
    """Share of the L^2 mass carried by the outermost panel."""
    density = (np.abs(plus) ** 2 + np.abs(minus) ** 2) * grid.measure(n)
    total = float(np.sum(density))
    if total == 0.0:
        return 0.0
    return float(np.sum(density[grid.outer_panel_mask()])) / total


def _grid_fingerprint(grid: RadialGrid) -> str:
    return hashlib.md5(np.ascontiguousarray(grid.nodes).tobytes()).hexdigest()


def default_grids(
    r_window: tuple[float, float] = DEFAULT_R_WINDOW,
    rho_window: tuple[float, float] = DEFAULT_RHO_WINDOW,
    order: int = MIN_ORDER,
) -> tuple[RadialGrid, RadialGrid]:
    """Panel grids whose panel lengths resolve the kernel oscillation on the opposite window."""
    r_grid = RadialGrid.gauss_panels(r_window[0], r_window[1], math.pi / rho_window[1], order)
    rho_grid = RadialGrid.gauss_panels(rho_window[0], rho_window[1], math.pi / r_window[1], order)
    return r_grid, rho_grid


@dataclass(frozen=True, eq=False)
class TransformPlan:
    """
    Kernel matrices of one channel between a radial grid and an energy grid.

    Kernels are evaluated on first use and kept for the lifetime of the plan (and in the
    optional on-disk cache).
    """

    channel: EigenChannel
    r_grid: RadialGrid
    rho_grid: RadialGrid
    tail_tolerance: float | None = DEFAULT_TAIL_TOLERANCE
    cache: CacheManager | None = None

    def __post_init__(self) -> None:
        for name, grid in (("r_grid", self.r_grid), ("rho_grid", self.rho_grid)):
            if not grid.log_uniform and grid.order < MIN_ORDER:
                raise DataValidationError(
                    f"{name} uses order {grid.order}; transforms need order >= {MIN_ORDER}",
                    details={"order": grid.order},
                )

    @property
    def n(self) -> int:
        return self.channel.n

    @property
    def constant(self) -> float:
        return transform_constant(self.n)

    def _cache_params(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "k": self.channel.k,
            "nu": self.channel.nu,
            "r_nodes": _grid_fingerprint(self.r_grid),
            "rho_nodes": _grid_fingerprint(self.rho_grid),
        }

    @cached_property
    def kernels(self) -> dict[str, np.ndarray]:
        """F+, G+, F-, G- at rho_j r_i, each of shape (len(rho_grid), len(r_grid))."""
        if self.cache is not None:
            cached = self.cache.get("dirac_kernel", self._cache_params())
            if cached is not None:
                return cached
        x = np.outer(self.rho_grid.nodes, self.r_grid.nodes)
        with time_operation("kernel_build", {"k": self.channel.k, "size": int(x.size)}):
            plus = eval_psi_array(self.channel, 1, x.ravel(), derivatives=False)
            minus = eval_psi_array(self.channel, -1, x.ravel(), derivatives=False)
        kernels = {
            "F_plus": np.asarray(plus.F, dtype=float).reshape(x.shape),
            "G_plus": np.asarray(plus.G, dtype=float).reshape(x.shape),
            "F_minus": np.asarray(minus.F, dtype=float).reshape(x.shape),
            "G_minus": np.asarray(minus.G, dtype=float).reshape(x.shape),
        }
        log_event(
            logger,
            "transform_plan",
            "built",
            level=logging.DEBUG,
            k=self.channel.k,
            nu=self.channel.nu,
            shape=list(x.shape),
            max_cancellation_digits=float(
                max(np.max(plus.cancellation_digits), np.max(minus.cancellation_digits))
            ),
        )
        if self.cache is not None:
            self.cache.set("dirac_kernel", self._cache_params(), kernels)
        return kernels

    def _check_tail(self, grid: RadialGrid, plus: np.ndarray, minus: np.ndarray, side: str) -> None:
        if self.tail_tolerance is None:
            return
        fraction = tail_fraction(grid, plus, minus, self.n)
        if fraction >= self.tail_tolerance:
            raise TruncationError(
                f"{side} profile carries {fraction:.3g} of its mass in the outermost panel",
                tail_fraction=fraction,
                details={"tolerance": self.tail_tolerance, "k": self.channel.k, "side": side},
            )


def _profiles(plus: np.ndarray, minus: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    plus = np.asarray(plus, dtype=complex)
    minus = np.asarray(minus, dtype=complex)
    if plus.shape != (size,) or minus.shape != (size,):
        raise DataValidationError("profile length does not match the grid", details={"expected": size})
    return plus, minus


def forward(plan: TransformPlan, f_plus: np.ndarray, f_minus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Radial profiles to energy profiles.

    Raises:
        TruncationError: the outermost radial panel holds at least tail_tolerance of the mass
    """
    f_plus, f_minus = _profiles(f_plus, f_minus, plan.r_grid.size)
    if not (f_plus.any() or f_minus.any()):
        zeros = np.zeros(plan.rho_grid.size, dtype=complex)
        return zeros, zeros.copy()
    plan._check_tail(plan.r_grid, f_plus, f_minus, "radial")
    weights = plan.r_grid.measure(plan.n)
    a = f_plus * weights
    b = f_minus * weights
    K = plan.kernels
    g_plus = plan.constant * (K["F_plus"] @ a + K["G_plus"] @ b)
    g_minus = plan.constant * (K["F_minus"] @ a + K["G_minus"] @ b)
    return g_plus, g_minus


def inverse(plan: TransformPlan, g_plus: np.ndarray, g_minus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Energy profiles to radial profiles with the transposed kernel.

    Raises:
        TruncationError: the outermost energy panel holds at least tail_tolerance of the mass
    """
    g_plus, g_minus = _profiles(g_plus, g_minus, plan.rho_grid.size)
    if not (g_plus.any() or g_minus.any()):
        zeros = np.zeros(plan.r_grid.size, dtype=complex)
        return zeros, zeros.copy()
    plan._check_tail(plan.rho_grid, g_plus, g_minus, "spectral")
    weights = plan.rho_grid.measure(plan.n)
    a = g_plus * weights
    b = g_minus * weights
    K = plan.kernels
    f_plus = plan.constant * (K["F_plus"].T @ a + K["F_minus"].T @ b)
    f_minus = plan.constant * (K["G_plus"].T @ a + K["G_minus"].T @ b)
    return f_plus, f_minus


def diagonalization_residual(plan: TransformPlan, f_plus: np.ndarray, f_minus: np.ndarray) -> float:
    """||forward(d f) - sigma3 rho forward(f)|| / ||sigma3 rho forward(f)||; 0 for f = 0."""
    f_plus, f_minus = _profiles(f_plus, f_minus, plan.r_grid.size)
    if not (f_plus.any() or f_minus.any()):
        return 0.0
    d_plus, d_minus = apply_radial_dirac(plan.channel, f_plus, f_minus, plan.r_grid)
    lhs_plus, lhs_minus = forward(plan, d_plus, d_minus)
    g_plus, g_minus = forward(plan, f_plus, f_minus)
    rho = plan.rho_grid.nodes
    rhs_plus, rhs_minus = rho * g_plus, -rho * g_minus
    weights = plan.rho_grid.measure(plan.n)
    error = float(np.sum((np.abs(lhs_plus - rhs_plus) ** 2 + np.abs(lhs_minus - rhs_minus) ** 2) * weights))
    scale = float(np.sum((np.abs(rhs_plus) ** 2 + np.abs(rhs_minus) ** 2) * weights))
    if scale == 0.0:
        return 0.0 if error == 0.0 else math.inf
    return math.sqrt(error / scale)


class HankelTransformer:
    """Per-channel plans over one pair of grids, built lazily and reused."""

    def __init__(
        self,
        n: int,
        nu: float,
        r_grid: RadialGrid,
        rho_grid: RadialGrid,
        tail_tolerance: float | None = DEFAULT_TAIL_TOLERANCE,
        cache: CacheManager | None = None,
    ):
        self.n = n
        self.nu = nu
        self.r_grid = r_grid
        self.rho_grid = rho_grid
        self.tail_tolerance = tail_tolerance
        self.cache = cache
        self._plans: dict[float, TransformPlan] = {}

    def plan(self, index: WaveIndex) -> TransformPlan:
        """The plan of a channel; m_k does not enter the radial problem."""
        if index.n != self.n:
            raise DataValidationError(f"channel {index.label} is not {self.n}-dimensional")
        if index.k not in self._plans:
            channel = make_channel(WaveIndex(self.n, index.k), self.nu)
            self._plans[index.k] = TransformPlan(
                channel, self.r_grid, self.rho_grid, tail_tolerance=self.tail_tolerance, cache=self.cache
            )
        return self._plans[index.k]

    def _require_grid(self, grid: RadialGrid, expected: RadialGrid, name: str) -> None:
        if grid is not expected and (
            grid.size != expected.size or not np.array_equal(grid.nodes, expected.nodes)
        ):
            raise DataValidationError(f"field is not sampled on the transformer's {name}")

    def forward_field(self, pwf: PartialWaveField) -> SpectralField:
        self._require_grid(pwf.grid, self.r_grid, "r_grid")
        channels = {index: forward(self.plan(index), *pwf.channels[index]) for index in pwf.indices}
        return SpectralField(self.n, self.rho_grid, channels)

    def inverse_field(self, sf: SpectralField) -> PartialWaveField:
        self._require_grid(sf.grid, self.rho_grid, "rho_grid")
        channels = {index: inverse(self.plan(index), *sf.channels[index]) for index in sf.indices}
        return PartialWaveField(self.n, self.r_grid, channels)

    def diagonalization_residuals(self, pwf: PartialWaveField) -> dict[WaveIndex, float]:
        return {index: diagonalization_residual(self.plan(index), *pwf.channels[index]) for index in pwf.indices}


def isometry_ratio(plan: TransformPlan, f_plus: np.ndarray, f_minus: np.ndarray) -> float:
    """||forward(f)|| / ||f||."""
    g_plus, g_minus = forward(plan, f_plus, f_minus)
    source = np.sum((np.abs(f_plus) ** 2 + np.abs(f_minus) ** 2) * plan.r_grid.measure(plan.n))
    target = np.sum((np.abs(g_plus) ** 2 + np.abs(g_minus) ** 2) * plan.rho_grid.measure(plan.n))
    if source == 0:
        return 1.0
    return math.sqrt(float(target / source))


def inversion_error(plan: TransformPlan, f_plus: np.ndarray, f_minus: np.ndarray) -> float:
    """Relative L^2 error of inverse(forward(f))."""
    back_plus, back_minus = inverse(plan, *forward(plan, f_plus, f_minus))
    weights = plan.r_grid.measure(plan.n)
    error = np.sum((np.abs(back_plus - f_plus) ** 2 + np.abs(back_minus - f_minus) ** 2) * weights)
    scale = np.sum((np.abs(f_plus) ** 2 + np.abs(f_minus) ** 2) * weights)
    return 0.0 if scale == 0 else math.sqrt(float(error / scale))
