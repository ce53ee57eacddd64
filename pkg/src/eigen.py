"""
Generalized Eigenfunctions
Continuum eigenfunctions of the radial Dirac-Coulomb matrices, both energy signs, analytic
derivatives, and the pointwise-bound verification campaign.

Convention (real pair). With x = energy * r, a = gamma - i nu, b = 2 gamma + 1,
W(x) = exp(i (x + xi)) 1F1(a, b, -2ix) and P(x) = N (2x)^(gamma - (n-1)/2):

    F_{k,+}(x) = P(x) Im W(x)        G_{k,+}(x) = P(x) Re W(x)

which solves d_{nu,k} psi = psi for the radial matrix of src.partialwave. The negative-energy pair is
the plus pair of the mirrored channel (k -> -k, nu -> -nu) with its components swapped.
At nu = 0 the pair is c x^(1-n/2) (J_{k+1/2}, J_{k-1/2}) for k > 0 with c = sqrt(2 pi) 2^(-n/2).
"""

from __future__ import annotations

import cmath
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from src.error_handler import CouplingError, DataValidationError, InvalidIndexError
from src.logging_utils import log_event
from src.specfun import gamma_complex, hyp1f1_array, hyp1f1_derivative_array

logger = logging.getLogger(__name__)

DECAY_LADDER_LENGTH = 4
MAX_CANCELLATION_DIGITS = 22.0
SMALL_RHO_WINDOW = (1e-8, 1e-6)


def _is_half_odd(value: float) -> bool:
    twice = 2.0 * value
    return abs(twice - round(twice)) < 1e-12 and int(round(twice)) % 2 != 0


def _is_integer(value: float) -> bool:
    return abs(value - round(value)) < 1e-12


def coupling_bound_text(n: int) -> str:
    return "1/2" if n == 2 else "1"


@dataclass(frozen=True)
class WaveIndex:
    """A partial-wave channel: dimension, relativistic quantum number k, and m_k in 3D."""

    n: int
    k: float
    m_k: float | None = None

    def __post_init__(self) -> None:
        details = {"n": self.n, "k": self.k, "m_k": self.m_k}
        if self.n == 2:
            if not _is_half_odd(self.k):
                raise InvalidIndexError(f"k must be a half-integer for n=2, got {self.k}", details=details)
            if self.m_k is not None:
                raise InvalidIndexError("m_k is not used for n=2", details=details)
        elif self.n == 3:
            if not _is_integer(self.k) or round(self.k) == 0:
                raise InvalidIndexError(f"k must be a nonzero integer for n=3, got {self.k}", details=details)
            if self.m_k is not None:
                if not _is_half_odd(self.m_k) or abs(self.m_k) > abs(self.k) - 0.5 + 1e-12:
                    raise InvalidIndexError(f"m_k = {self.m_k} is not allowed for k = {self.k}", details=details)
        else:
            raise InvalidIndexError(f"dimension must be 2 or 3, got {self.n}", details=details)

    @property
    def sort_key(self) -> tuple[float, float, float]:
        return (abs(self.k), self.k, self.m_k if self.m_k is not None else 0.0)

    @property
    def label(self) -> str:
        if self.m_k is None:
            return f"k={self.k:+g}"
        return f"k={self.k:+g},m={self.m_k:+g}"

    def mirrored(self) -> WaveIndex:
        return WaveIndex(self.n, -self.k, self.m_k)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"k": self.k}
        if self.m_k is not None:
            payload["m_k"] = self.m_k
        return payload

    @classmethod
    def from_dict(cls, n: int, payload: dict[str, Any]) -> WaveIndex:
        return cls(n, float(payload["k"]), None if payload.get("m_k") is None else float(payload["m_k"]))


@dataclass(frozen=True)
class EigenChannel:
    """Per-channel constants of the eigenfunction formula."""

    index: WaveIndex
    nu: float
    gamma: float
    xi: float
    norm_prefactor: float

    @property
    def n(self) -> int:
        return self.index.n

    @property
    def k(self) -> float:
        return self.index.k

    @property
    def small_rho_exponent(self) -> float:
        return self.gamma - (self.n - 1) / 2.0

    def mirrored(self) -> EigenChannel:
        """Channel with k -> -k and nu -> -nu."""
        return make_channel(self.index.mirrored(), -self.nu)


def make_channel(index: WaveIndex, nu: float) -> EigenChannel:
    """
    Build the channel constants gamma, xi and N.

    Raises:
        CouplingError: |nu| > (n-1)/2 or gamma not positive
    """
    bound = (index.n - 1) / 2.0
    if abs(nu) > bound + 1e-15:
        raise CouplingError(
            f"coupling |nu| = {abs(nu):g} exceeds the bound |nu| <= {coupling_bound_text(index.n)} for n = {index.n}",
            nu=nu,
            bound=bound,
        )
    gamma_sq = index.k * index.k - nu * nu
    if gamma_sq <= 0.0:
        raise CouplingError(
            f"gamma = sqrt(k^2 - nu^2) is not positive for k = {index.k:g}, nu = {nu:g}", nu=nu, bound=abs(index.k)
        )
    gamma = math.sqrt(gamma_sq)
    ratio = complex(gamma, -nu) / abs(index.k)
    if index.k > 0:
        xi = -0.5 * cmath.phase(ratio)
    else:
        xi = 0.5 * math.pi - 0.5 * cmath.phase(ratio)
    norm = (
        math.sqrt(2.0)
        * abs(gamma_complex(complex(gamma + 1.0, nu)))
        * math.exp(math.pi * nu / 2.0)
        / gamma_complex(2.0 * gamma + 1.0).real
    )
    return EigenChannel(index=index, nu=float(nu), gamma=gamma, xi=xi, norm_prefactor=norm)


@dataclass(frozen=True)
class EigenSample:
    """F, G and their derivatives at one scaled radius (real in this convention)."""

    rho: float
    F: float
    G: float
    F_prime: float
    G_prime: float


@dataclass(frozen=True)
class EigenValues:
    """Vectorized eigenfunction samples."""

    rho: np.ndarray
    F: np.ndarray
    G: np.ndarray
    F_prime: np.ndarray | None
    G_prime: np.ndarray | None
    cancellation_digits: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.F, self.G)

    @property
    def derivative_magnitude(self) -> np.ndarray:
        if self.F_prime is None or self.G_prime is None:
            raise DataValidationError("derivatives were not requested")
        return np.hypot(self.F_prime, self.G_prime)


def _plus_branch(channel: EigenChannel, x: np.ndarray, derivatives: bool) -> EigenValues:
    a = complex(channel.gamma, -channel.nu)
    b = 2.0 * channel.gamma + 1.0
    z = -2j * x
    m_values, diagnostics = hyp1f1_array(a, b, z)
    phase = np.exp(1j * (x + channel.xi))
    w = phase * m_values
    power = channel.small_rho_exponent
    prefactor = channel.norm_prefactor * (2.0 * x) ** power
    f_values = prefactor * w.imag
    g_values = prefactor * w.real
    f_prime = g_prime = None
    if derivatives:
        dw = 1j * w - 2j * phase * hyp1f1_derivative_array(a, b, z)
        dprefactor = prefactor * power / x
        f_prime = dprefactor * w.imag + prefactor * dw.imag
        g_prime = dprefactor * w.real + prefactor * dw.real
    return EigenValues(x, f_values, g_values, f_prime, g_prime, diagnostics.cancellation_digits)


def eval_psi_array(
    channel: EigenChannel, energy_sign: int, rho: np.ndarray, derivatives: bool = True
) -> EigenValues:
    """
    Evaluate psi_{k,+-} at the scaled radii rho = energy * r.

    Raises:
        DataValidationError: rho not strictly positive or sign not +-1
        ConvergenceError: propagated from 1F1
    """
    x = np.asarray(rho, dtype=float)
    if x.size and not np.all(x > 0):
        raise DataValidationError("eigenfunctions are evaluated at rho > 0 only")
    if energy_sign == 1:
        return _plus_branch(channel, x, derivatives)
    if energy_sign == -1:
        mirrored = _plus_branch(channel.mirrored(), x, derivatives)
        return EigenValues(x, mirrored.G, mirrored.F, mirrored.G_prime, mirrored.F_prime, mirrored.cancellation_digits)
    raise DataValidationError(f"energy sign must be +1 or -1, got {energy_sign}")


def eval_psi(channel: EigenChannel, energy_sign: int, rho: float) -> EigenSample:
    """Single-point eigenfunction sample with analytic derivatives."""
    values = eval_psi_array(channel, energy_sign, np.array([float(rho)]))
    assert values.F_prime is not None and values.G_prime is not None
    return EigenSample(
        rho=float(rho),
        F=float(values.F[0]),
        G=float(values.G[0]),
        F_prime=float(values.F_prime[0]),
        G_prime=float(values.G_prime[0]),
    )


def eval_psi_scaled(
    channel: EigenChannel, energy_sign: int, energy: float, r: np.ndarray, derivatives: bool = False
) -> EigenValues:
    """psi_{k, sign * energy}(r); the value depends on energy * r only."""
    return eval_psi_array(channel, energy_sign, energy * np.asarray(r, dtype=float), derivatives=derivatives)


@dataclass(frozen=True)
class BoundReport:
    """Minimal per-regime constants of the three-regime pointwise bound."""

    channel: EigenChannel
    regime_constants: tuple[float, float, float]
    decay_constant: float
    passed: bool
    grid_spec: str
    regime_counts: tuple[int, int, int] = (0, 0, 0)
    excluded: int = 0
    small_rho_exponent: float = float("nan")
    derivative: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.channel.n,
            "k": self.channel.k,
            "nu": self.channel.nu,
            "gamma": self.channel.gamma,
            "regime_constants": list(self.regime_constants),
            "regime_counts": list(self.regime_counts),
            "decay_constant": self.decay_constant,
            "pass": self.passed,
            "grid_spec": self.grid_spec,
            "excluded": self.excluded,
            "small_rho_exponent": self.small_rho_exponent,
            "expected_small_rho_exponent": self.channel.small_rho_exponent,
            "derivative": self.derivative,
        }


def regime_masks(k: float, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The (overlapping) ranges of the three-regime bound."""
    ak = abs(k)
    first = rho <= max(ak / 2.0, 2.0)
    second = (rho >= ak / 2.0) & (rho <= 2.0 * ak)
    third = rho >= 2.0 * ak
    return first, second, third


def regime_envelopes(
    n: int, k: float, exponent: float, decay_constant: float, rho: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ak = abs(k)
    first = np.minimum(rho / 2.0, 1.0) ** exponent * math.exp(-decay_constant * ak)
    second = ak ** (-(2 * n - 3) / 4.0) * (np.abs(ak - rho) + ak ** (1.0 / 3.0)) ** (-0.25)
    third = rho ** (-(n - 1) / 2.0)
    return first, second, third


def fit_small_rho_exponent(channel: EigenChannel, derivative: bool = False) -> float:
    """Log-log slope of |psi| (or |psi'|) on SMALL_RHO_WINDOW."""
    rho = np.geomspace(SMALL_RHO_WINDOW[0], SMALL_RHO_WINDOW[1], 9)
    values = eval_psi_array(channel, 1, rho, derivatives=derivative)
    magnitude = values.derivative_magnitude if derivative else values.magnitude
    slope, _ = np.polyfit(np.log(rho), np.log(magnitude), 1)
    return float(slope)


def default_decay_ladder(n: int) -> tuple[float, ...]:
    start = 4.5 if n == 2 else 4.0
    return tuple(start + i for i in range(DECAY_LADDER_LENGTH))


@functools.lru_cache(maxsize=64)
def fit_decay_constant(
    n: int, nu: float, k_values: tuple[float, ...] | None = None, derivative: bool = False
) -> float:
    """
    Least-squares D from the first-regime suprema over a ladder of |k|.

    sup_{rho <= max(|k|/2, 2)} |psi| / min(rho/2, 1)^e  ~  C exp(-D |k|).
    """
    ladder = k_values or default_decay_ladder(n)
    suprema = []
    for k in ladder:
        channel = make_channel(WaveIndex(n, k), nu)
        rho = np.geomspace(1e-3, max(abs(k) / 2.0, 2.0), 400)
        values = eval_psi_array(channel, 1, rho, derivatives=derivative)
        magnitude = values.derivative_magnitude if derivative else values.magnitude
        exponent = channel.small_rho_exponent - (1.0 if derivative else 0.0)
        suprema.append(float(np.max(magnitude / np.minimum(rho / 2.0, 1.0) ** exponent)))
    if len(ladder) < 2:
        return 0.0
    slope, _ = np.polyfit(np.abs(np.array(ladder)), np.log(np.array(suprema)), 1)
    return max(float(-slope), 0.0)


def _bound_report(
    channel: EigenChannel, rho_grid: np.ndarray, decay_constant: float | None, derivative: bool
) -> BoundReport:
    rho = np.asarray(rho_grid, dtype=float)
    if decay_constant is None:
        decay_constant = fit_decay_constant(channel.n, channel.nu, derivative=derivative)
    values = eval_psi_array(channel, 1, rho, derivatives=derivative)
    magnitude = values.derivative_magnitude if derivative else values.magnitude
    confident = np.isfinite(magnitude) & (values.cancellation_digits <= MAX_CANCELLATION_DIGITS)
    exponent = channel.small_rho_exponent - (1.0 if derivative else 0.0)

    constants = []
    counts = []
    for mask, envelope in zip(
        regime_masks(channel.k, rho), regime_envelopes(channel.n, channel.k, exponent, decay_constant, rho)
    ):
        selected = mask & confident
        counts.append(int(selected.sum()))
        # empty supremum is 0
        constants.append(float(np.max(magnitude[selected] / envelope[selected])) if selected.any() else 0.0)

    passed = all(math.isfinite(c) for c in constants)
    report = BoundReport(
        channel=channel,
        regime_constants=(constants[0], constants[1], constants[2]),
        decay_constant=decay_constant,
        passed=passed,
        grid_spec=f"{rho.size} points on [{rho.min():.3g}, {rho.max():.3g}]" if rho.size else "empty",
        regime_counts=(counts[0], counts[1], counts[2]),
        excluded=int((~confident).sum()),
        small_rho_exponent=fit_small_rho_exponent(channel, derivative=derivative),
        derivative=derivative,
    )
    log_event(
        logger,
        "verify_bounds",
        "pass" if passed else "fail",
        level=logging.DEBUG,
        k=channel.k,
        nu=channel.nu,
        constants=constants,
        derivative=derivative,
    )
    return report


def verify_pointwise_bounds(
    channel: EigenChannel, rho_grid: np.ndarray, decay_constant: float | None = None
) -> BoundReport:
    """
    Minimal constants C per regime of

        |psi(rho)| <= C min(rho/2, 1)^(gamma-(n-1)/2) exp(-D|k|)       rho <= max(|k|/2, 2)
        |psi(rho)| <= C |k|^(-(2n-3)/4) (| |k| - rho | + |k|^(1/3))^(-1/4)   |k|/2 <= rho <= 2|k|
        |psi(rho)| <= C rho^(-(n-1)/2)                                    rho >= 2|k|

    with D fitted over a |k| ladder unless given. Samples whose 1F1 evaluation lost more than
    MAX_CANCELLATION_DIGITS digits are excluded and counted.
    """
    return _bound_report(channel, rho_grid, decay_constant, derivative=False)


def verify_derivative_bounds(
    channel: EigenChannel, rho_grid: np.ndarray, decay_constant: float | None = None
) -> BoundReport:
    """Derivative variant: first-regime exponent gamma - (n+1)/2."""
    return _bound_report(channel, rho_grid, decay_constant, derivative=True)


def default_rho_grid(k: float, points: int = 600) -> np.ndarray:
    return np.geomspace(1e-3, 4.0 * max(abs(k), 2.0), points)


def channel_ladder(n: int, k_max: float) -> list[WaveIndex]:
    """Indices k = +-1/2 .. +-k_max (n=2) or +-1 .. +-k_max (n=3), without m_k."""
    start = 0.5 if n == 2 else 1.0
    ladder = []
    k = start
    while k <= k_max + 1e-12:
        ladder.extend([WaveIndex(n, k), WaveIndex(n, -k)])
        k += 1.0
    return ladder


def uniformity_spread(reports: list[BoundReport]) -> list[float]:
    """
    Per regime, growth of the constants over the top half of the |k| range: the largest constant
    there divided by the one at the lowest |k| of that half (both signs of k), minus 1.
    Constants that fall with |k| give 0; regimes with a zero reference constant are skipped.
    """
    if not reports:
        return [0.0, 0.0, 0.0]
    k_max = max(abs(r.channel.k) for r in reports)
    top = [r for r in reports if abs(r.channel.k) >= k_max / 2.0]
    k_ref = min(abs(r.channel.k) for r in top)
    spreads = []
    for regime in range(3):
        reference = max(r.regime_constants[regime] for r in top if abs(r.channel.k) == k_ref)
        largest = max(r.regime_constants[regime] for r in top)
        spreads.append(max(largest / reference - 1.0, 0.0) if reference > 0 else 0.0)
    return spreads
