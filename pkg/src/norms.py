"""
Norms and Exponents
Mixed space-time norms, homogeneous Sobolev norms through the transform, the Morrey
local-smoothing functional, Strichartz admissibility and the dyadic exponents of the annulus
and localized estimates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from numpy.polynomial import legendre
from scipy.integrate import trapezoid

from src.eigen import EigenChannel, eval_psi_array
from src.error_handler import CouplingError, DataValidationError, RadialityError, ZeroDatumError
from src.hankel import HankelTransformer
from src.logging_utils import log_event
from src.partialwave import PartialWaveField, RadialGrid, is_dirac_radial_index
from src.propagator import Propagator, Trajectory, spectral_grid
from src.validators import validate_choice

logger = logging.getLogger(__name__)

INF = math.inf
RADIAL_CLASSES = ("all", "dirac_radial", "dirac_nonradial", "hartree_pair")
SOBOLEV_RANGE = (-1.0, 2.0)
DEFAULT_EPSILON = 0.99
MIN_FIT_POINTS = 6


def _check_exponent(name: str, value: float) -> None:
    if not 2.0 <= value <= INF:
        raise DataValidationError(f"{name} must lie in [2, inf], got {value}", details={name: value})


# --- exponents ----------------------------------------------------------------------------------


def beta_exponent(n: int, q: float) -> float:
    """beta(q): 1/q - 1/2 | 1/q - 1/3 (n=2) and 1/q - 1 | 1/q - 5/6 (n=3), switching at q = 4."""
    _check_exponent("q", q)
    inv = 0.0 if q == INF else 1.0 / q
    if n == 2:
        return inv - (0.5 if q < 4 else 1.0 / 3.0)
    return inv - (1.0 if q < 4 else 5.0 / 6.0)


def delta_exponent(n: int, p: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """delta(p) = 1/p - (n-1)/2 for p < 4, 1/(4 epsilon) - (n-1)/2 otherwise, epsilon in (1/2, 1)."""
    _check_exponent("p", p)
    if not 0.5 < epsilon < 1.0:
        raise DataValidationError(f"epsilon must lie in (1/2, 1), got {epsilon}")
    if p < 4:
        return 1.0 / p - (n - 1) / 2.0
    return 1.0 / (4.0 * epsilon) - (n - 1) / 2.0


def lowest_gamma(n: int, nu: float) -> float:
    """gamma of the lowest channel: sqrt(1/4 - nu^2) (n=2) or sqrt(1 - nu^2) (n=3)."""
    k = 0.5 if n == 2 else 1.0
    value = k * k - nu * nu
    if value <= 0:
        raise CouplingError(f"no positive gamma for |nu| = {abs(nu):g} at n = {n}", nu=nu, bound=k)
    return math.sqrt(value)


def gamma_condition(n: int, nu: float, p: float, q: float, epsilon: float = DEFAULT_EPSILON) -> bool:
    """Summability of Q(NR) over dyadic N: gamma - (n-1)/2 + n/q > 0 and 1/q + delta(p)(1 - 2/q) < 0."""
    inv_q = 0.0 if q == INF else 1.0 / q
    small = lowest_gamma(n, nu) - (n - 1) / 2.0 + n * inv_q
    large = inv_q + delta_exponent(n, p, epsilon) * (1.0 - 2.0 * inv_q)
    return small > 0 and large < 0


@dataclass(frozen=True)
class ExponentTable:
    """Dyadic exponents and the weight Q(NR) of one (n, nu, p, q) configuration."""

    n: int
    nu: float
    p: float
    q: float
    epsilon: float = DEFAULT_EPSILON

    @property
    def beta(self) -> float:
        return beta_exponent(self.n, self.q)

    @property
    def delta(self) -> float:
        return delta_exponent(self.n, self.p, self.epsilon)

    @property
    def small_exponent(self) -> float:
        return lowest_gamma(self.n, self.nu) - (self.n - 1) / 2.0 + self.n / self.q

    @property
    def large_exponent(self) -> float:
        return 1.0 / self.q + self.delta * (1.0 - 2.0 / self.q)

    def q_weight(self, N: float | np.ndarray, R: float | np.ndarray) -> np.ndarray:
        """(NR)^small below 1, (NR)^large above 2, log-linear in between."""
        x = np.asarray(N, dtype=float) * np.asarray(R, dtype=float)
        small = np.power(np.minimum(x, 1.0), self.small_exponent)
        large = np.power(np.maximum(x, 2.0), self.large_exponent)
        theta = np.clip(np.log2(np.clip(x, 1.0, 2.0)), 0.0, 1.0)
        middle = 2.0 ** (theta * self.large_exponent)
        return np.where(x <= 1.0, small, np.where(x >= 2.0, large, middle))

    def schur_sum(self, R: float, levels: tuple[int, int] = (-60, 60)) -> float:
        N = 2.0 ** np.arange(levels[0], levels[1] + 1)
        return float(np.sum(self.q_weight(N, R)))

    def schur_supremum(self, radii: Sequence[float]) -> float:
        return max(self.schur_sum(R) for R in radii)


# --- admissibility ------------------------------------------------------------------------------


@dataclass(frozen=True)
class StrichartzCase:
    n: int
    p: float
    q: float
    s: float
    nu: float
    admissible: bool
    radial_class: str = "all"
    q_c: float = INF
    p_c: float = 2.0
    reason: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "s": self.s,
            "nu": self.nu,
            "admissible": self.admissible,
            "radial_class": self.radial_class,
            "q_c": self.q_c,
            "p_c": self.p_c,
            "reason": self.reason,
        }


def sobolev_index(n: int, p: float, q: float) -> float:
    """s = n/2 - n/q - 1/p."""
    return n / 2.0 - (0.0 if q == INF else n / q) - (0.0 if p == INF else 1.0 / p)


def critical_exponents(n: int, nu: float, radial_class: str = "all") -> tuple[float, float]:
    """
    (q_c, p_c) of the requested class.

    Raises:
        CouplingError: |nu| outside the range of the class
    """
    validate_choice(radial_class, RADIAL_CLASSES, "radial_class")
    a = abs(nu)
    if n == 2:
        if radial_class == "dirac_nonradial":
            if a > 0.5:
                raise CouplingError(f"|nu| = {a:g} exceeds 1/2 for non-radial 2D data", nu=nu, bound=0.5)
            return INF, 2.0
        if radial_class == "hartree_pair":
            raise DataValidationError("the hartree_pair class is three-dimensional")
        bound = math.sqrt(2.0) / 3.0
        if a >= bound:
            raise CouplingError(f"|nu| = {a:g} must be below sqrt(2)/3 for 2D Strichartz", nu=nu, bound=bound)
        g = math.sqrt(0.25 - nu * nu)
        q_c = INF if g >= 0.5 else 2.0 / (0.5 - g)
        return q_c, (g + 0.5) / g
    if n != 3:
        raise DataValidationError(f"dimension must be 2 or 3, got {n}")
    if radial_class == "dirac_nonradial":
        if a > 1.0:
            raise CouplingError(f"|nu| = {a:g} exceeds 1 for non-radial 3D data", nu=nu, bound=1.0)
        return INF, 2.0
    bound = math.sqrt(3.0) / 2.0 if radial_class == "hartree_pair" else math.sqrt(15.0) / 4.0
    if a >= bound:
        raise CouplingError(f"|nu| = {a:g} must be below {bound:.6g} for 3D Strichartz", nu=nu, bound=bound)
    root = math.sqrt(1.0 - nu * nu)
    return (INF if root >= 1.0 else 3.0 / (1.0 - root)), 2.0


def hartree_pair_threshold(nu: float) -> float:
    """Lower bound 3 / (1 + 2 sqrt(1 - nu^2)) of the kernel exponent p."""
    return 3.0 / (1.0 + 2.0 * math.sqrt(1.0 - nu * nu))


def admissibility(n: int, nu: float, p: float, q: float, radial_class: str = "all") -> StrichartzCase:
    """
    Evaluate the admissibility region of the Strichartz estimate.

    n = 2: (p, q) = (inf, 2), or p_c < p <= inf, 2 <= q < q_c and 2/q + (p_c/p)(1 - 2/q_c) < 1.
    n = 3: (p, q) = (inf, 2), or 2 <= p <= inf, 2 <= q < q_c and 2/q + 1/p < 1.
    Dirac-non-radial data use q_c = inf (q = inf included). The hartree_pair class reads (p, q) as the
    pair (2 p_omega, 2 p_omega') and needs p_omega > 3 / (1 + 2 sqrt(1 - nu^2)).
    """
    _check_exponent("p", p)
    _check_exponent("q", q)
    q_c, p_c = critical_exponents(n, nu, radial_class)
    s = sobolev_index(n, p, q)
    inv_p = 0.0 if p == INF else 1.0 / p
    inv_q = 0.0 if q == INF else 1.0 / q
    inv_qc = 0.0 if q_c == INF else 1.0 / q_c
    nonradial = radial_class == "dirac_nonradial"

    if radial_class == "hartree_pair":
        p_omega = p / 2.0
        if p_omega <= 1.0 or p == INF:
            return StrichartzCase(n, p, q, s, nu, False, radial_class, q_c, p_c, "p/2 must lie in (1, inf)")
        conjugate = 2.0 * p_omega / (p_omega - 1.0)
        if abs(q - conjugate) > 1e-12 * conjugate:
            return StrichartzCase(n, p, q, s, nu, False, radial_class, q_c, p_c, "q is not 2 (p/2)'")
        threshold = hartree_pair_threshold(nu)
        ok = p_omega > threshold
        return StrichartzCase(
            n, p, q, s, nu, ok, radial_class, q_c, p_c, "" if ok else f"p/2 <= {threshold:.6g}"
        )

    if p == INF and q == 2.0:
        return StrichartzCase(n, p, q, s, nu, True, radial_class, q_c, p_c, "endpoint")
    reason = ""
    if n == 2:
        lhs = 2.0 * inv_q + p_c * inv_p * (1.0 - 2.0 * inv_qc)
        in_range = p > p_c and (q <= q_c if nonradial else q < q_c)
    else:
        lhs = 2.0 * inv_q + inv_p
        in_range = q <= q_c if nonradial else q < q_c
    if not in_range:
        reason = "outside the (p_c, q_c) range"
    elif lhs >= 1.0:
        reason = "admissibility inequality fails"
    return StrichartzCase(n, p, q, s, nu, not reason, radial_class, q_c, p_c, reason)


def hartree_pair_case(nu: float, p_omega: float) -> StrichartzCase:
    """The Strichartz pair (2p, 2p') with s = 1/p used for the Hartree solution space."""
    if p_omega <= 1.0 or p_omega == INF:
        raise DataValidationError(f"kernel exponent must lie in (1, inf), got {p_omega}")
    return admissibility(3, nu, 2.0 * p_omega, 2.0 * p_omega / (p_omega - 1.0), "hartree_pair")


# --- mixed and Sobolev norms --------------------------------------------------------------------


def _lq(values: np.ndarray, measure: np.ndarray, q: float) -> np.ndarray:
    """L^q over the last axis."""
    if q == INF:
        return np.max(values, axis=-1)
    return np.sum(values**q * measure, axis=-1) ** (1.0 / q)


def _lp_time(values: np.ndarray, times: np.ndarray, p: float) -> float:
    if p == INF:
        return float(np.max(values))
    if times.size < 2:
        raise DataValidationError("finite p needs at least two time nodes")
    return float(trapezoid(values**p, times) ** (1.0 / p))


def mixed_norm(traj: Trajectory, p: float, q: float, ordering: str = "pointwise") -> float:
    """
    ||u||_{L^p_t L^q_{r^(n-1)dr} L^2_theta}.

    The angular L^2 norm is the l^2 sum over (channel, +-) of the profiles. With
    ordering="channelwise" the L^q norm is taken per profile before the l^2 sum, which
    bounds the pointwise ordering from above for q >= 2.
    """
    _check_exponent("p", p)
    _check_exponent("q", q)
    measure = traj.grid.measure(traj.n)
    if not traj.indices:
        return 0.0
    stacked = np.concatenate([np.abs(traj.profile_array(i)) for i in traj.indices], axis=1)
    if ordering == "pointwise":
        per_time = _lq(np.sqrt(np.sum(stacked**2, axis=1)), measure, q)
    elif ordering == "channelwise":
        per_time = np.sqrt(np.sum(_lq(stacked, measure, q) ** 2, axis=1))
    else:
        raise DataValidationError(f"unknown ordering {ordering!r}")
    return _lp_time(per_time, np.asarray(traj.times, dtype=float), p)


def _check_flavor(flavor: str) -> None:
    if flavor not in ("free", "coulomb"):
        raise DataValidationError(f"flavor must be 'free' or 'coulomb', got {flavor!r}")


def sobolev_norm(
    u: PartialWaveField,
    s: float,
    nu: float = 0.0,
    flavor: str = "coulomb",
    rho_grid: RadialGrid | None = None,
    transformer: HankelTransformer | None = None,
) -> float:
    """
    ||rho^s P u||, with P at coupling nu (flavor "coulomb") or at nu = 0 (flavor "free").

    Raises:
        DataValidationError: s outside [-1, 2] or a transformer at the wrong coupling
        TruncationError: from the transform
    """
    _check_flavor(flavor)
    if not SOBOLEV_RANGE[0] <= s <= SOBOLEV_RANGE[1]:
        raise DataValidationError(f"s must lie in {list(SOBOLEV_RANGE)}, got {s}")
    coupling = nu if flavor == "coulomb" else 0.0
    if transformer is None:
        transformer = HankelTransformer(u.n, coupling, u.grid, rho_grid or spectral_grid(u.grid))
    elif transformer.nu != coupling:
        raise DataValidationError("transformer coupling does not match the requested flavor")
    spectral = transformer.forward_field(u)
    rho = spectral.grid.nodes
    measure = spectral.grid.measure(u.n)
    total = 0.0
    for plus, minus in spectral.channels.values():
        total += float(np.sum(rho ** (2.0 * s) * (np.abs(plus) ** 2 + np.abs(minus) ** 2) * measure))
    return math.sqrt(total)


def norm_equivalence_ratios(
    u: PartialWaveField, nu: float, s_values: Sequence[float], rho_grid: RadialGrid | None = None
) -> dict[float, float]:
    """coulomb / free Sobolev ratio per s."""
    rho_grid = rho_grid or spectral_grid(u.grid)
    free = HankelTransformer(u.n, 0.0, u.grid, rho_grid)
    coulomb = HankelTransformer(u.n, nu, u.grid, rho_grid)
    ratios = {}
    for s in s_values:
        denominator = sobolev_norm(u, s, 0.0, "free", transformer=free)
        if denominator == 0.0:
            raise ZeroDatumError("norm ratio of a zero datum")
        ratios[float(s)] = sobolev_norm(u, s, nu, "coulomb", transformer=coulomb) / denominator
    return ratios


def strichartz_ratio(
    u0: PartialWaveField,
    nu: float,
    case: StrichartzCase,
    times: Sequence[float] | np.ndarray,
    rho_grid: RadialGrid | None = None,
    flavor: str = "coulomb",
    propagator: Propagator | None = None,
    sobolev_transformer: HankelTransformer | None = None,
) -> float:
    """
    mixed_norm(e^{itD_nu} u0, p, q) / ||u0||_{H^s} over the given time nodes.

    A prebuilt propagator (and a transformer for the Sobolev norm) let sweeps reuse kernels.

    Raises:
        ZeroDatumError: u0 = 0
        DataValidationError: the case is not admissible
    """
    if not case.admissible:
        raise DataValidationError(
            f"(p, q) = ({case.p}, {case.q}) is not admissible: {case.reason}", details=case.to_dict()
        )
    if u0.norm() == 0.0:
        raise ZeroDatumError("Strichartz ratio of a zero datum")
    if propagator is None:
        rho_grid = rho_grid or spectral_grid(u0.grid)
        propagator = Propagator(HankelTransformer(u0.n, nu, u0.grid, rho_grid))
    elif propagator.nu != nu:
        raise DataValidationError("propagator coupling does not match nu")
    rho_grid = propagator.transformer.rho_grid
    numerator = mixed_norm(propagator.evolve_trajectory(u0, times), case.p, case.q)
    transformer = sobolev_transformer or (propagator.transformer if flavor == "coulomb" else None)
    denominator = sobolev_norm(u0, case.s, nu, flavor, rho_grid=rho_grid, transformer=transformer)
    if denominator == 0.0:
        raise ZeroDatumError("datum has zero Sobolev norm on the energy window")
    return numerator / denominator


# --- local smoothing ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MorreyResult:
    radii: list[float]
    values: list[float]
    supremum: float
    argmax: int

    @property
    def interior(self) -> bool:
        return 0 < self.argmax < len(self.radii) - 1

    @property
    def plateau_ratio(self) -> float:
        """max / median of the per-R values."""
        median = float(np.median(self.values))
        return math.inf if median == 0 else self.supremum / median


def morrey_functional(traj: Trajectory, radii: Sequence[float]) -> MorreyResult:
    """R^(-1/2) ||u||_{L^2_t L^2(|x| <= R)} per R and the supremum over the set."""
    grid = traj.grid
    radii = [float(R) for R in radii]
    for R in radii:
        if not grid.r_min < R <= grid.r_max:
            raise DataValidationError(f"R = {R} lies outside the grid range", details={"R": R})
    if len(traj) < 2:
        raise DataValidationError("the Morrey functional needs at least two time nodes")
    times = np.asarray(traj.times, dtype=float)
    densities = [
        sum(np.abs(state.channels[i][0]) ** 2 + np.abs(state.channels[i][1]) ** 2 for i in traj.indices)
        for state in traj.states
    ]
    values = []
    for R in radii:
        if not traj.indices:
            values.append(0.0)
            continue
        mass = np.array([grid.mass_below(np.asarray(d), R, traj.n) for d in densities])
        values.append(math.sqrt(max(float(trapezoid(mass, times)), 0.0) / R))
    argmax = int(np.argmax(values)) if values else 0
    supremum = values[argmax] if values else 0.0
    return MorreyResult(radii=radii, values=values, supremum=supremum, argmax=argmax)


def smoothing_average(channel: EigenChannel, radii: Sequence[float], order: int = 16) -> np.ndarray:
    """(1/R) int_0^R |psi_k|^2 rho^(n-1) d rho per R."""
    out = []
    for R in radii:
        grid = RadialGrid.gauss_panels(min(1e-8, R * 1e-6), R, 1.0, order)
        values = eval_psi_array(channel, 1, grid.nodes, derivatives=False).magnitude ** 2
        out.append(float(np.sum(values * grid.measure(channel.n))) / R)
    return np.array(out)


# --- annulus exponents --------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnulusFit:
    slope: float
    intercept: float
    residual: float
    target: float
    bound: float
    radii: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)

    def matches(self, tolerance: float = 0.05) -> bool:
        """Within tolerance relative to the target (absolute when the target is 0)."""
        scale = abs(self.target) if self.target != 0 else 1.0
        return abs(self.slope - self.target) <= tolerance * scale


def annulus_norm(channel: EigenChannel, q: float, R: float, derivative: bool = False) -> float:
    """||psi_k||_{L^q([R, 2R])} (or of psi_k') with Gauss-Legendre nodes."""
    t, w = legendre.leggauss(max(32, int(math.ceil(4.0 * R))))
    rho = 1.5 * R + 0.5 * R * t
    weights = 0.5 * R * w
    values = eval_psi_array(channel, 1, rho, derivatives=derivative)
    magnitude = values.derivative_magnitude if derivative else values.magnitude
    if q == INF:
        return float(np.max(magnitude))
    return float(np.sum(magnitude**q * weights) ** (1.0 / q))


def default_annulus_radii(regime: str) -> list[float]:
    if regime == "small":
        return [2.0**j for j in range(-14, -6)]
    if regime == "large":
        return [2.0**j for j in range(5, 11)]
    raise DataValidationError(f"regime must be 'small' or 'large', got {regime!r}")


def annulus_exponent_fit(
    channel: EigenChannel,
    q: float,
    regime: str = "small",
    radii: Sequence[float] | None = None,
    derivative: bool = False,
) -> AnnulusFit:
    """
    Least-squares log-log slope of ||psi_k||_{L^q([R, 2R])} against dyadic R.

    Small R targets gamma + 1/q - (n-1)/2 (gamma + 1/q - (n+1)/2 for derivatives). At large R the
    single-channel slope is 1/q - (n-1)/2; `bound` carries beta(q), the channel-uniform exponent.
    """
    _check_exponent("q", q)
    radii = list(radii) if radii is not None else default_annulus_radii(regime)
    if len(radii) < MIN_FIT_POINTS:
        raise DataValidationError(f"slope fits need at least {MIN_FIT_POINTS} radii")
    inv_q = 0.0 if q == INF else 1.0 / q
    n = channel.n
    if regime == "small":
        target = channel.gamma + inv_q - ((n + 1) / 2.0 if derivative else (n - 1) / 2.0)
        bound = target
    else:
        target = inv_q - (n - 1) / 2.0
        bound = beta_exponent(n, q)
    norms = [annulus_norm(channel, q, R, derivative) for R in radii]
    x = np.log(np.array(radii))
    y = np.log(np.array(norms))
    (slope, intercept), residuals, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(math.sqrt(residuals[0] / len(radii))) if len(residuals) else 0.0
    fit = AnnulusFit(float(slope), float(intercept), residual, target, bound, radii, norms)
    log_event(
        logger,
        "annulus_fit",
        "complete",
        level=logging.DEBUG,
        k=channel.k,
        nu=channel.nu,
        q=q,
        regime=regime,
        slope=fit.slope,
        target=target,
    )
    return fit


def annulus_derivative_fit(channel: EigenChannel, q: float, radii: Sequence[float] | None = None) -> AnnulusFit:
    return annulus_exponent_fit(channel, q, "small", radii, derivative=True)


# --- 2D Hardy -----------------------------------------------------------------------------------


def _require_nonradial_2d(u: PartialWaveField) -> None:
    if u.n != 2:
        raise DataValidationError("the Hardy check is two-dimensional")
    for index in u.indices:
        if is_dirac_radial_index(index) and u.channel_norm(index) > 0.0:
            raise RadialityError(
                f"channel {index.label} is Dirac-radial; the Hardy check needs non-radial data",
                details={"k": index.k},
            )


def hardy_check_2d(u: PartialWaveField) -> float:
    """
    || |x|^-1 u || / || grad u || for Dirac-non-radial 2D data, channelwise:
    ||grad(f e^{im theta})||^2 = int (|f'|^2 + m^2 |f|^2 / r^2) r dr with m = k -+ 1/2.

    Raises:
        RadialityError: a |k| = 1/2 channel carries mass
    """
    _require_nonradial_2d(u)
    grid = u.grid
    r = grid.nodes
    measure = grid.measure(2)
    weighted = 0.0
    gradient = 0.0
    for index in u.indices:
        for profile, m in zip(u.channels[index], (index.k - 0.5, index.k + 0.5)):
            if not profile.any():
                continue
            amplitude = np.abs(profile) ** 2 / r**2
            weighted += float(np.sum(amplitude * measure))
            derivative = grid.differentiate(profile)
            gradient += float(np.sum((np.abs(derivative) ** 2 + m * m * amplitude) * measure))
    if gradient == 0.0:
        return 0.0
    return math.sqrt(weighted / gradient)


def hardy_lower_bound_2d(
    u: PartialWaveField, nu: float, s: float = 1.0, rho_grid: RadialGrid | None = None
) -> float:
    """coulomb / free Sobolev ratio for Dirac-non-radial 2D data."""
    _require_nonradial_2d(u)
    return norm_equivalence_ratios(u, nu, [s], rho_grid)[float(s)]
