"""
Hartree Nonlinearity
N(u) = (omega * <beta u, u>) u for Dirac-radial 3D data, the radial convolution, and the Picard
iteration of the Duhamel map

    Phi(u)(t) = e^{itD} u0 - i int_0^t e^{i(t-s)D} N(u(s)) ds.

Iterates are kept in the interaction picture H(t) = e^{-it rho sigma3} P u(t), which is
smooth in t; values between time nodes come from cubic splines of H.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Callable

import numpy as np
from jsonschema import Draft7Validator
from numpy.polynomial import legendre
from scipy import integrate
from scipy.interpolate import CubicSpline

from src.eigen import WaveIndex
from src.error_handler import (
    ConfigurationError,
    CouplingError,
    DataValidationError,
    NonContractionError,
    RadialityError,
)
from src.hankel import HankelTransformer, SpectralField
from src.logging_utils import log_event
from src.norms import INF, hartree_pair_case, hartree_pair_threshold, mixed_norm
from src.partialwave import PartialWaveField, RadialGrid, is_dirac_radial_index
from src.performance_monitor import time_operation, track_performance
from src.propagator import Trajectory, spectral_grid
from src.validators import validate_positive_int

logger = logging.getLogger(__name__)

DUHAMEL_NODES = 16
NONCONTRACTION_STREAK = 3
COUPLING_BOUND = math.sqrt(3.0) / 2.0
STANDARD_EXPONENTS = (1.5, 2.0, 2.5, 3.0, INF)

_TABLE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["r", "omega", "lp_norms"],
    "properties": {
        "r": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 4},
        "omega": {"type": "array", "items": {"type": "number"}, "minItems": 4},
        "lp_norms": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
    },
}


# --- kernels ------------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConvolutionKernel:
    """
    A radial kernel omega(|x|) with its primitive W(t) = int_0^t tau omega(tau) d tau.

    yukawa:  c exp(-b tau) / tau       (in L^p for p < 3)
    bracket: (1 + tau^2)^(-alpha/2)    (in L^p for p > 3/alpha)
    tabulated: samples from tau = 0 with caller-supplied L^p norms
    """

    kind: str
    params: dict[str, float]
    lp_norms: dict[float, float] = field(default_factory=dict)
    table: tuple[np.ndarray, np.ndarray] | None = None

    @classmethod
    def yukawa(cls, b: float = 1.0, c: float = 1.0) -> ConvolutionKernel:
        if b <= 0:
            raise DataValidationError(f"yukawa needs b > 0, got {b}")
        kernel = cls("yukawa", {"b": float(b), "c": float(c)})
        kernel.lp_norms.update({p: kernel._quadrature_norm(p) for p in STANDARD_EXPONENTS})
        return kernel

    @classmethod
    def bracket(cls, alpha: float) -> ConvolutionKernel:
        if alpha <= 0:
            raise DataValidationError(f"bracket needs alpha > 0, got {alpha}")
        kernel = cls("bracket", {"alpha": float(alpha)})
        kernel.lp_norms.update({p: kernel._quadrature_norm(p) for p in STANDARD_EXPONENTS})
        return kernel

    @classmethod
    def tabulated(cls, r: np.ndarray, omega: np.ndarray, lp_norms: dict[float, float]) -> ConvolutionKernel:
        r = np.asarray(r, dtype=float)
        omega = np.asarray(omega, dtype=float)
        if r.shape != omega.shape or r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise DataValidationError("a kernel table needs increasing radii starting at 0")
        return cls("tabulated", {}, {float(p): float(v) for p, v in lp_norms.items()}, (r, omega))

    @classmethod
    def from_file(cls, path: str | Path) -> ConvolutionKernel:
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
        errors = list(Draft7Validator(_TABLE_SCHEMA).iter_errors(payload))
        if errors:
            raise ConfigurationError(f"invalid kernel table {path}: {errors[0].message}")
        norms = {
            (INF if key in ("inf", "infinity") else float(key)): value for key, value in payload["lp_norms"].items()
        }
        return cls.tabulated(np.array(payload["r"]), np.array(payload["omega"]), norms)

    @classmethod
    def from_spec(cls, spec: str) -> ConvolutionKernel:
        """Parse "yukawa:b=1,c=1", "bracket:alpha=2" or "table:<path>"."""
        kind, _, rest = spec.partition(":")
        kind = kind.strip().lower()
        if kind == "table":
            if not rest:
                raise ConfigurationError("table kernels need a path: table:<path>")
            return cls.from_file(rest)
        try:
            values = {
                key.strip(): float(value)
                for key, value in (item.split("=", 1) for item in rest.split(",") if item.strip())
            }
        except ValueError as exc:
            raise ConfigurationError(f"cannot parse kernel parameters in {spec!r}") from exc
        if kind == "yukawa":
            unknown = set(values) - {"b", "c"}
            if unknown:
                raise ConfigurationError(f"unknown yukawa parameters {sorted(unknown)}")
            return cls.yukawa(values.get("b", 1.0), values.get("c", 1.0))
        if kind == "bracket":
            if set(values) != {"alpha"}:
                raise ConfigurationError("bracket kernels take exactly one parameter, alpha")
            return cls.bracket(values["alpha"])
        raise ConfigurationError(f"unknown kernel kind {kind!r}")

    @property
    def spec(self) -> str:
        if self.kind == "tabulated":
            return "table"
        return f"{self.kind}:" + ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))

    @property
    def is_zero(self) -> bool:
        if self.kind == "yukawa":
            return self.params["c"] == 0.0
        if self.kind == "tabulated" and self.table is not None:
            return not np.any(self.table[1])
        return False

    @cached_property
    def _table_primitive(self) -> Any:
        assert self.table is not None
        r, omega = self.table
        return CubicSpline(r, r * omega).antiderivative()

    def __call__(self, tau: np.ndarray) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        if self.kind == "yukawa":
            return self.params["c"] * np.exp(-self.params["b"] * tau) / tau
        if self.kind == "bracket":
            return (1.0 + tau * tau) ** (-self.params["alpha"] / 2.0)
        assert self.table is not None
        r, omega = self.table
        return np.interp(tau, r, omega, right=0.0)

    def primitive(self, t: np.ndarray) -> np.ndarray:
        """W(t) = int_0^t tau omega(tau) d tau."""
        t = np.asarray(t, dtype=float)
        if self.kind == "yukawa":
            b, c = self.params["b"], self.params["c"]
            return c / b * -np.expm1(-b * t)
        if self.kind == "bracket":
            alpha = self.params["alpha"]
            if abs(alpha - 2.0) < 1e-14:
                return 0.5 * np.log1p(t * t)
            return ((1.0 + t * t) ** (1.0 - alpha / 2.0) - 1.0) / (2.0 - alpha)
        assert self.table is not None
        end = self.table[0][-1]
        return self._table_primitive(np.minimum(t, end))

    def _quadrature_norm(self, p: float) -> float:
        """||omega||_{L^p(R^3)} = (4 pi int tau^2 |omega|^p d tau)^(1/p), inf when divergent."""
        if self.kind == "yukawa":
            if self.params["c"] == 0.0:
                return 0.0
            if p == INF or p >= 3.0:
                return INF
        if self.kind == "bracket":
            if p == INF:
                return 1.0
            if self.params["alpha"] * p <= 3.0:
                return INF

        def integrand(tau: float) -> float:
            return tau * tau * abs(float(self(np.array(tau)))) ** p

        inner, _ = integrate.quad(integrand, 0.0, 1.0, limit=200)
        outer, _ = integrate.quad(integrand, 1.0, np.inf, limit=200)
        return float((4.0 * math.pi * (inner + outer)) ** (1.0 / p))

    def lp_norm(self, p: float) -> float:
        """
        Raises:
            DataValidationError: a tabulated kernel without the requested norm
        """
        key = INF if p == INF else float(p)
        if key not in self.lp_norms:
            if self.kind == "tabulated":
                raise DataValidationError(f"tabulated kernel has no L^{p} norm supplied")
            self.lp_norms[key] = self._quadrature_norm(key)
        return self.lp_norms[key]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": self.params,
            "lp_norms": {("inf" if p == INF else str(p)): v for p, v in sorted(self.lp_norms.items())},
        }


class ConvolutionOperator:
    """
    h -> omega * h for radial h on a panel grid, as a matrix:

        (omega * h)(r) = (2 pi / r) int s h(s) [W(r + s) - W(|r - s|)] ds

    The panel holding r is split at r and h interpolated there with the panel's Legendre basis.
    """

    def __init__(self, kernel: ConvolutionKernel, grid: RadialGrid):
        if grid.log_uniform:
            raise DataValidationError("the radial convolution needs a Gauss-Legendre panel grid")
        self.kernel = kernel
        self.grid = grid

    @cached_property
    def matrix(self) -> np.ndarray:
        grid = self.grid
        order = grid.order
        t_ref, w_ref = legendre.leggauss(order)
        inv_vander = np.linalg.inv(legendre.legvander(t_ref, order - 1))
        s = grid.nodes
        W = self.kernel.primitive
        matrix = np.empty((s.size, s.size))
        with time_operation("convolution_matrix", {"size": int(s.size), "kernel": self.kernel.spec}):
            for i, r in enumerate(s):
                row = s * grid.weights * (W(r + s) - W(np.abs(r - s)))
                panel = i // order
                lo, hi = grid.panels[panel], grid.panels[panel + 1]
                own = slice(panel * order, (panel + 1) * order)
                row[own] = 0.0
                for a, b in ((lo, r), (r, hi)):
                    x = 0.5 * (b - a) * t_ref + 0.5 * (a + b)
                    wx = 0.5 * (b - a) * w_ref
                    interp = legendre.legvander((2.0 * x - lo - hi) / (hi - lo), order - 1) @ inv_vander
                    row[own] += (wx * x * (W(r + x) - W(np.abs(r - x)))) @ interp
                matrix[i] = 2.0 * math.pi / r * row
        return matrix

    def __call__(self, h: np.ndarray) -> np.ndarray:
        if self.kernel.is_zero:
            return np.zeros_like(h)
        return self.matrix @ h


def require_dirac_radial(u: PartialWaveField) -> None:
    """
    Raises:
        RadialityError: not 3D, or mass outside the |k| = 1 channels
    """
    if u.n != 3:
        raise RadialityError("the Hartree nonlinearity is three-dimensional")
    for index in u.indices:
        if not is_dirac_radial_index(index) and u.channel_norm(index) > 0.0:
            raise RadialityError(f"channel {index.label} is not Dirac-radial", details={"k": index.k})


def density(u: PartialWaveField) -> np.ndarray:
    """Spherical mean of <beta u, u>: sum over channels of (|f+|^2 - |f-|^2) / (4 pi)."""
    h = np.zeros(u.grid.size)
    for plus, minus in u.channels.values():
        h += np.abs(plus) ** 2 - np.abs(minus) ** 2
    return h / (4.0 * math.pi)


def hartree_potential(
    omega: ConvolutionKernel, u: PartialWaveField, operator: ConvolutionOperator | None = None
) -> np.ndarray:
    """V = omega * <beta u, u> on the grid of u."""
    require_dirac_radial(u)
    operator = operator or ConvolutionOperator(omega, u.grid)
    return operator(density(u))


def apply_nonlinearity(
    omega: ConvolutionKernel, u: PartialWaveField, operator: ConvolutionOperator | None = None
) -> PartialWaveField:
    """N(u) = V u channelwise; the channel set of u is kept."""
    potential = hartree_potential(omega, u, operator)
    return u.with_channels({i: (potential * p, potential * m) for i, (p, m) in u.channels.items()})


def auto_time(omega_norm: float, m_radius: float) -> float:
    """0.9 min{1/(2 ||omega|| M^2), 1/(8 ||omega|| M^2)}; inf when the nonlinearity vanishes."""
    scale = omega_norm * m_radius * m_radius
    if scale == 0.0:
        return INF
    return 0.9 * min(1.0 / (2.0 * scale), 1.0 / (8.0 * scale))


# --- Picard iteration ---------------------------------------------------------------------------


Interaction = dict[WaveIndex, np.ndarray]


@dataclass
class PicardState:
    """Iterates of the Duhamel map with their successive distances."""

    iterates: list[Trajectory]
    T: float
    M: float
    s: float = 0.0
    contraction_factors: list[float] = field(default_factory=list)
    distances: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def solution(self) -> Trajectory:
        return self.iterates[-1]

    def mass_drift(self) -> float:
        masses = np.array([state.norm() for state in self.solution.states])
        if masses[0] == 0.0:
            return 0.0
        return float(np.max(np.abs(masses / masses[0] - 1.0)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "T": self.T,
            "M": self.M,
            "s": self.s,
            "iterations": len(self.iterates),
            "converged": self.converged,
            "factors": self.contraction_factors,
            "distances": self.distances,
            "norms": self.norms,
            "mass_drift": self.mass_drift(),
        }


class PicardSolver:
    """Duhamel iteration for one datum grid, coupling and kernel."""

    def __init__(
        self,
        nu: float,
        omega: ConvolutionKernel,
        r_grid: RadialGrid,
        rho_grid: RadialGrid | None = None,
        s: float = 0.0,
        duhamel_nodes: int = DUHAMEL_NODES,
    ):
        if abs(nu) >= COUPLING_BOUND:
            raise CouplingError(
                f"coupling |nu| = {abs(nu):g} must be below sqrt(3)/2 for the Hartree problem",
                nu=nu,
                bound=COUPLING_BOUND,
            )
        self.nu = nu
        self.omega = omega
        self.s = s
        self.transformer = HankelTransformer(3, nu, r_grid, rho_grid or spectral_grid(r_grid), tail_tolerance=None)
        self.operator = ConvolutionOperator(omega, r_grid)
        self.rule = legendre.leggauss(duhamel_nodes)

    @property
    def rho(self) -> np.ndarray:
        return self.transformer.rho_grid.nodes

    def _phase(self, t: float) -> np.ndarray:
        """e^{it rho sigma3} as a (2, P) array."""
        forward_phase = np.exp(1j * t * self.rho)
        return np.stack([forward_phase, np.conj(forward_phase)])

    def _physical(self, values: dict[WaveIndex, np.ndarray], t: float) -> PartialWaveField:
        """Field at time t from interaction-picture profiles of shape (2, P)."""
        phase = self._phase(t)
        channels = {index: tuple(g * phase) for index, g in values.items()}
        return self.transformer.inverse_field(SpectralField(3, self.transformer.rho_grid, channels))

    def trajectory(self, H: Interaction, times: np.ndarray, provenance: str) -> Trajectory:
        states = [self._physical({i: series[j] for i, series in H.items()}, float(t)) for j, t in enumerate(times)]
        return Trajectory(times, states, provenance)

    def sobolev_distance(self, A: Interaction, B: Interaction | None = None) -> float:
        """sup_t || rho^s (A(t) - B(t)) || over the time nodes."""
        weights = self.transformer.rho_grid.measure(3) * self.rho ** (2.0 * self.s)
        total = None
        for index, series in A.items():
            diff = series if B is None else series - B[index]
            contribution = np.sum(np.abs(diff) ** 2 * weights, axis=(1, 2))
            total = contribution if total is None else total + contribution
        return 0.0 if total is None else float(np.sqrt(np.max(total)))

    @staticmethod
    def _interpolants(H: Interaction, times: np.ndarray) -> dict[WaveIndex, Callable[[float], np.ndarray]]:
        """Cubic splines in t of the real and imaginary parts (linear for two nodes)."""
        interpolants = {}
        for index, series in H.items():
            stacked = np.concatenate([series.real, series.imag], axis=1)
            if times.size > 2:
                spline = CubicSpline(times, stacked, axis=0)
            else:
                spline = _linear(times, stacked)
            half = series.shape[1]
            interpolants[index] = lambda t, spline=spline, half=half: _recombine(spline(t), half)
        return interpolants

    def duhamel(self, H: Interaction, times: np.ndarray) -> Interaction:
        """int_0^t e^{-is rho sigma3} P N(u(s)) ds at each time node, u taken from H."""
        interpolants = self._interpolants(H, times)
        x, w = self.rule
        out = {index: np.zeros_like(series) for index, series in H.items()}
        for j, t in enumerate(times):
            if t == 0.0:
                continue
            for node, weight in zip(0.5 * t * (1.0 + x), 0.5 * t * w):
                u_node = self._physical({i: f(float(node)) for i, f in interpolants.items()}, float(node))
                spectral = self.transformer.forward_field(apply_nonlinearity(self.omega, u_node, self.operator))
                back = np.conj(self._phase(float(node)))
                for index in out:
                    out[index][j] += weight * back * np.stack(spectral.channels[index])
        return out

    def free_interaction(self, u0: PartialWaveField, times: np.ndarray) -> Interaction:
        spectral = self.transformer.forward_field(u0)
        return {i: np.repeat(np.stack(spectral.channels[i])[None], times.size, axis=0) for i in spectral.indices}

    @track_performance("picard_iteration")
    def step(self, H0: Interaction, H: Interaction, times: np.ndarray) -> Interaction:
        """Phi in the interaction picture: H0 - i * duhamel(H)."""
        if self.omega.is_zero:
            return {index: series.copy() for index, series in H0.items()}
        integral = self.duhamel(H, times)
        return {index: H0[index] - 1j * integral[index] for index in H0}

    def solve(
        self,
        u0: PartialWaveField,
        T: float,
        time_nodes: int = 9,
        tol: float = 1e-10,
        max_iters: int = 30,
        M: float | None = None,
    ) -> PicardState:
        """
        Iterate u^{m+1} = Phi(u^m) from the linear flow until the sup_t H^s distance of
        successive iterates drops below tol. Exhausting max_iters returns converged=False.

        The first factor is d(u^1, u^0) / sup_t ||u^0||; later ones are ratios of successive distances.

        Raises:
            RadialityError: u0 not Dirac-radial
            NonContractionError: factors above 1 on NONCONTRACTION_STREAK consecutive iterations
        """
        require_dirac_radial(u0)
        if not (T > 0 and math.isfinite(T)):
            raise DataValidationError("need a finite T > 0", details={"T": T})
        times = np.linspace(0.0, T, validate_positive_int(time_nodes, "time_nodes", min_value=2))
        H0 = self.free_interaction(u0, times)
        base = self.sobolev_distance(H0)
        state = PicardState(
            iterates=[self.trajectory(H0, times, "linear")],
            T=T,
            M=2.0 * base if M is None else M,
            s=self.s,
            norms=[base],
        )
        current = H0
        streak = 0
        for iteration in range(1, max_iters + 1):
            following = self.step(H0, current, times)
            distance = self.sobolev_distance(following, current)
            if iteration == 1:
                factor = distance / base if base > 0 else 0.0
            else:
                previous = state.distances[-1]
                factor = distance / previous if previous > 0 else 0.0
            state.iterates.append(self.trajectory(following, times, "nonlinear"))
            state.distances.append(distance)
            state.contraction_factors.append(factor)
            state.norms.append(self.sobolev_distance(following))
            log_event(logger, "picard", "iterate", iteration=iteration, distance=distance, factor=factor)
            if distance < tol:
                state.converged = True
                break
            streak = streak + 1 if factor > 1.0 and iteration > 1 else 0
            if streak >= NONCONTRACTION_STREAK:
                raise NonContractionError(
                    f"Picard factors exceeded 1 on {streak} consecutive iterations; reduce T",
                    factors=list(state.contraction_factors),
                    details={"T": T},
                )
            current = following
        if not state.converged:
            log_event(logger, "picard", "max_iters", level=logging.WARNING, iterations=max_iters)
        return state


def _linear(times: np.ndarray, stacked: np.ndarray) -> Callable[[float], np.ndarray]:
    def value(t: float) -> np.ndarray:
        theta = (t - times[0]) / (times[-1] - times[0])
        return (1.0 - theta) * stacked[0] + theta * stacked[-1]

    return value


def _recombine(sample: np.ndarray, half: int) -> np.ndarray:
    return sample[:half] + 1j * sample[half:]


def picard_solve(
    u0: PartialWaveField,
    nu: float,
    omega: ConvolutionKernel,
    T: float,
    time_nodes: int = 9,
    tol: float = 1e-10,
    max_iters: int = 30,
    s: float = 0.0,
    rho_grid: RadialGrid | None = None,
) -> PicardState:
    solver = PicardSolver(nu, omega, u0.grid, rho_grid, s=s)
    return solver.solve(u0, T, time_nodes, tol, max_iters)


def gateaux_constant(
    u0: PartialWaveField,
    v0: PartialWaveField,
    nu: float,
    omega: ConvolutionKernel,
    T: float,
    time_nodes: int = 9,
    rho_grid: RadialGrid | None = None,
) -> float:
    """
    K in sup_t ||D(u) - D(v)|| <= K T (||u|| + ||v||)^2 ||u - v|| for the Duhamel term D along the
    linear flows of u0 and v0 (sup_t L^2 norms).
    """
    solver = PicardSolver(nu, omega, u0.grid, rho_grid, s=0.0)
    times = np.linspace(0.0, T, time_nodes)
    Hu = solver.free_interaction(u0, times)
    Hv = solver.free_interaction(v0, times)
    Du = solver.duhamel(Hu, times)
    Dv = solver.duhamel(Hv, times)
    size = solver.sobolev_distance(Hu) + solver.sobolev_distance(Hv)
    gap = solver.sobolev_distance(Hu, Hv)
    if size == 0.0 or gap == 0.0:
        return 0.0
    return solver.sobolev_distance(Du, Dv) / (T * size * size * gap)


def wellposedness_certificate(state: PicardState, p_omega: float, nu: float) -> dict[str, Any]:
    """
    Desk-scale check that the solution lies in the spaces of the existence statements:
    s = 3/(2p) with the norm-equivalence boundary flagged for s >= 1, and for p above
    3/(1 + 2 sqrt(1 - nu^2)) a finite L^{2p}_T L^{2p'} norm.
    """
    if not state.converged:
        raise DataValidationError("certificates need a converged Picard state")
    s = 0.0 if p_omega == INF else 3.0 / (2.0 * p_omega)
    report: dict[str, Any] = {
        "p": p_omega,
        "nu": nu,
        "s": s,
        "equivalence_boundary": s >= 1.0,
        "sup_sobolev_norm": state.norms[-1],
        "finite_sobolev_norm": math.isfinite(state.norms[-1]),
        "notes": [],
    }
    if s > 1.0:
        report["notes"].append("s > 1: Coulomb and free Sobolev norms are no longer equivalent")
    elif s == 1.0:
        report["notes"].append("s = 1: on the norm-equivalence boundary")
    if p_omega == INF:
        report["notes"].append("bounded kernel: the certificate reduces to L^2 bounds")
        report["hartree_pair"] = None
        return report
    threshold = hartree_pair_threshold(nu)
    if p_omega > threshold and p_omega > 1.0:
        case = hartree_pair_case(nu, p_omega)
        value = mixed_norm(state.solution, case.p, case.q)
        report["hartree_pair"] = {"case": case.to_dict(), "mixed_norm": value, "finite": math.isfinite(value)}
    else:
        report["hartree_pair"] = {"threshold": threshold, "admissible": False}
    return report
