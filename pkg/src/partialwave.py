"""
Partial Wave Decomposition
Angular bases, radial quadrature grids, channel fields and the radial Dirac-Coulomb matrices.

Angular bases (orthonormal in L^2 of the circle / sphere):
    n = 2:  Xi+_k = (e^{i(k-1/2)theta}, 0) / sqrt(2 pi),   Xi-_k = (0, e^{i(k+1/2)theta}) / sqrt(2 pi)
    n = 3:  Xi+_{k,m} = (i Omega_{k,m}, 0, 0),             Xi-_{k,m} = (0, 0, Omega_{-k,m})
with the spinor harmonics
    Omega_{k,m} = (sqrt|k-m+1/2| Y_l^{m-1/2}, sgn(-k) sqrt|k+m+1/2| Y_l^{m+1/2}) / sqrt|2k+1|,
    l = |k+1/2| - 1/2.

Note: the Hardy-inequality argument is often written as d/dtheta Xi+-_k = (k -+ 1/2) Xi+-_k; with the
basis above the relation carries a factor i, d/dtheta Xi+-_k = i (k -+ 1/2) Xi+-_k. Modulus identities
are unaffected.
"""

from __future__ import annotations

import functools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, ClassVar, Iterable, TypeVar

import numpy as np
from jsonschema import Draft7Validator
from numpy.polynomial import legendre

from src.eigen import EigenChannel, WaveIndex
from src.error_handler import DataValidationError, InvalidIndexError, SupportError
from src.logging_utils import log_event

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = {2: 7.5, 3: 5.0}
ALIASING_THRESHOLD = 0.01
SUPPORT_TOLERANCE = 1e-10
DROP_TOLERANCE = 1e-14

FieldSampler = Callable[[np.ndarray, np.ndarray], np.ndarray]
FieldT = TypeVar("FieldT", bound="ChannelField")


@dataclass(frozen=True, eq=False)
class CliffordBasis:
    """Pauli matrices, Dirac alpha matrices and beta = diag(1, 1, -1, -1)."""

    pauli: tuple[np.ndarray, np.ndarray, np.ndarray]
    dirac: tuple[np.ndarray, np.ndarray, np.ndarray]
    beta: np.ndarray

    @classmethod
    def standard(cls) -> CliffordBasis:
        sigma1 = np.array([[0, 1], [1, 0]], dtype=complex)
        sigma2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
        sigma3 = np.array([[1, 0], [0, -1]], dtype=complex)
        zero = np.zeros((2, 2), dtype=complex)
        alphas = tuple(np.block([[zero, s], [s, zero]]) for s in (sigma1, sigma2, sigma3))
        beta = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
        return cls(pauli=(sigma1, sigma2, sigma3), dirac=alphas, beta=beta)  # type: ignore[arg-type]

    def anticommutator_defect(self) -> float:
        """Largest entry of {A, B} - 2 delta I over all pairs, including beta against the alphas."""
        defect = 0.0
        for family in (self.pauli, self.dirac + (self.beta,)):
            size = family[0].shape[0]
            for i, left in enumerate(family):
                for j, right in enumerate(family):
                    target = 2.0 * np.eye(size) if i == j else np.zeros((size, size))
                    defect = max(defect, float(np.max(np.abs(left @ right + right @ left - target))))
        return defect


CLIFFORD = CliffordBasis.standard()


# --- radial grids -------------------------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _legendre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    return legendre.leggauss(order)


@functools.lru_cache(maxsize=32)
def _legendre_derivative_matrix(order: int) -> np.ndarray:
    """Differentiation matrix on the Gauss-Legendre nodes of [-1, 1]."""
    t, _ = _legendre_rule(order)
    vander = legendre.legvander(t, order - 1)
    dvander = np.empty_like(vander)
    for j in range(order):
        coefficients = np.zeros(order)
        coefficients[j] = 1.0
        dvander[:, j] = legendre.legval(t, legendre.legder(coefficients))
    return dvander @ np.linalg.inv(vander)


def _gregory_weights(count: int) -> np.ndarray:
    weights = np.ones(count)
    ends = np.array([17.0, 59.0, 43.0, 49.0]) / 48.0
    weights[:4] = ends
    weights[-4:] = ends[::-1]
    return weights


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """
    Radial quadrature nodes.

    `weights` integrate in dr; `measure(n)` gives the weights of the r^(n-1) dr measure. Panel grids
    (Gauss-Legendre per panel) reproduce the length of [r_min, r_max] to rounding; log-uniform grids
    use a fourth-order end-corrected rule in s = ln r.
    """

    nodes: np.ndarray
    weights: np.ndarray
    panels: np.ndarray
    order: int = 0
    log_uniform: bool = False

    def __post_init__(self) -> None:
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise DataValidationError("a grid needs at least two nodes")
        if not np.all(self.nodes > 0) or not np.all(np.diff(self.nodes) > 0):
            raise DataValidationError("grid nodes must be positive and strictly increasing")
        if self.weights.shape != self.nodes.shape or not np.all(self.weights > 0):
            raise DataValidationError("grid weights must be positive and match the nodes")

    @classmethod
    def from_panels(cls, boundaries: Iterable[float], order: int = 8) -> RadialGrid:
        edges = np.asarray(list(boundaries), dtype=float)
        if edges.size < 2 or not np.all(np.diff(edges) > 0) or edges[0] <= 0:
            raise DataValidationError("panel boundaries must be positive and increasing")
        t, w = _legendre_rule(order)
        lo = edges[:-1, None]
        hi = edges[1:, None]
        nodes = (0.5 * (hi - lo) * t[None, :] + 0.5 * (hi + lo)).ravel()
        weights = (0.5 * (hi - lo) * w[None, :]).ravel()
        return cls(nodes=nodes, weights=weights, panels=edges, order=order)

    @classmethod
    def gauss_panels(
        cls,
        r_min: float,
        r_max: float,
        max_panel_length: float,
        order: int = 8,
        pivot: float = 1.0,
    ) -> RadialGrid:
        """
        Dyadic panels [2^j, 2^(j+1)] below the pivot, uniform panels of length 2^-m <= max_panel_length
        above it, every panel no longer than max_panel_length.
        """
        if not 0 < r_min < r_max:
            raise DataValidationError("need 0 < r_min < r_max", details={"r_min": r_min, "r_max": r_max})
        if max_panel_length <= 0:
            raise DataValidationError("max_panel_length must be positive")
        edges = [r_min]
        top = min(pivot, r_max)
        if r_min < top:
            j = math.floor(math.log2(r_min)) + 1
            while 2.0**j < top:
                edges.append(2.0**j)
                j += 1
            edges.append(top)
        step = 2.0 ** math.floor(math.log2(max_panel_length))
        start = edges[-1]
        lattice = math.floor(start / step) + 1
        while lattice * step < r_max:
            edges.append(lattice * step)
            lattice += 1
        if edges[-1] < r_max:
            edges.append(r_max)
        refined = [edges[0]]
        for lo, hi in zip(edges[:-1], edges[1:]):
            pieces = max(1, math.ceil((hi - lo) / max_panel_length - 1e-12))
            refined.extend(lo + (hi - lo) * (i + 1) / pieces for i in range(pieces))
        refined[-1] = edges[-1]
        return cls.from_panels(refined, order)

    @classmethod
    def log_uniform(cls, r_min: float, r_max: float, count: int) -> RadialGrid:
        if not 0 < r_min < r_max or count < 8:
            raise DataValidationError("need 0 < r_min < r_max and at least 8 nodes")
        s = np.linspace(math.log(r_min), math.log(r_max), count)
        nodes = np.exp(s)
        nodes[0], nodes[-1] = r_min, r_max
        h = s[1] - s[0]
        weights = h * nodes * _gregory_weights(count)
        return cls(nodes=nodes, weights=weights, panels=np.array([r_min, r_max]), log_uniform=True)

    @property
    def r_min(self) -> float:
        return float(self.panels[0])

    @property
    def r_max(self) -> float:
        return float(self.panels[-1])

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def max_panel_length(self) -> float:
        return float(np.max(np.diff(self.panels)))

    def measure(self, n: int) -> np.ndarray:
        return self.weights * self.nodes ** (n - 1)

    def integrate(self, values: np.ndarray, n: int = 1) -> Any:
        return np.sum(values * self.measure(n), axis=-1)

    def outer_panel_mask(self) -> np.ndarray:
        """Nodes in the outermost panel (last order nodes, or the last tenth of a log-uniform grid)."""
        mask = np.zeros(self.size, dtype=bool)
        if self.log_uniform:
            mask[-max(1, self.size // 10) :] = True
        else:
            mask[-self.order :] = True
        return mask

    def mass_below(self, values: np.ndarray, radius: float, n: int) -> float:
        """int_{r_min}^{radius} values r^(n-1) dr; exact panel sums when radius is a panel boundary."""
        measure = self.measure(n)
        if not self.log_uniform:
            boundaries = np.isclose(self.panels, radius, rtol=1e-12, atol=0.0)
            if boundaries.any():
                panel = int(np.argmax(boundaries))
                return float(np.sum(values[: panel * self.order] * measure[: panel * self.order]))
        cumulative = np.concatenate([[0.0], np.cumsum(values * measure)])
        positions = np.concatenate([[self.r_min], self.nodes])
        return float(np.interp(radius, positions, cumulative))

    def differentiate(self, values: np.ndarray) -> np.ndarray:
        """d/dr of nodal values: 4th-order differences in ln r, or per-panel Legendre differentiation."""
        values = np.asarray(values)
        if self.log_uniform:
            h = math.log(self.nodes[1] / self.nodes[0])
            d = np.empty_like(values)
            f = values
            d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
            d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
            d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
            d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
            d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
            return d / self.nodes
        matrix = _legendre_derivative_matrix(self.order)
        lengths = np.diff(self.panels)
        blocks = values.reshape(lengths.size, self.order)
        return ((blocks @ matrix.T) * (2.0 / lengths)[:, None]).ravel()

    def scaled(self, factor: float) -> RadialGrid:
        return RadialGrid(
            nodes=self.nodes * factor,
            weights=self.weights * factor,
            panels=self.panels * factor,
            order=self.order,
            log_uniform=self.log_uniform,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
            "panels": self.panels.tolist(),
            "order": self.order,
            "log_uniform": self.log_uniform,
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> RadialGrid:
        nodes = np.asarray(payload["nodes"], dtype=float)
        panels = payload.get("panels") or [float(nodes[0]), float(nodes[-1])]
        return cls(
            nodes=nodes,
            weights=np.asarray(payload["weights"], dtype=float),
            panels=np.asarray(panels, dtype=float),
            order=int(payload.get("order", 0)),
            log_uniform=bool(payload.get("log_uniform", False)),
        )


# --- angular bases ------------------------------------------------------------------------------


def spherical_harmonic(l: int, m: int, polar: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    """Y_l^m with the Condon-Shortley phase, from the normalized associated Legendre recurrence."""
    polar = np.asarray(polar, dtype=float)
    azimuth = np.asarray(azimuth, dtype=float)
    am = abs(m)
    if am > l:
        return np.zeros(np.broadcast(polar, azimuth).shape, dtype=complex)
    x = np.cos(polar)
    s = np.sin(polar)
    pmm = np.full(x.shape, 1.0 / math.sqrt(4.0 * math.pi))
    for i in range(1, am + 1):
        pmm = -math.sqrt((2.0 * i + 1.0) / (2.0 * i)) * s * pmm
    plm = pmm
    if l > am:
        previous, current = pmm, math.sqrt(2.0 * am + 3.0) * x * pmm
        for ll in range(am + 2, l + 1):
            a = math.sqrt((4.0 * ll * ll - 1.0) / (ll * ll - am * am))
            b = math.sqrt(((ll - 1.0) ** 2 - am * am) / (4.0 * (ll - 1.0) ** 2 - 1.0))
            previous, current = current, a * (x * current - b * previous)
        plm = current
    y = plm * np.exp(1j * am * azimuth)
    if m < 0:
        y = (-1) ** am * np.conj(y)
    return y


def spinor_harmonic(k: int, m_k: float, polar: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    """Omega_{k,m_k} sampled at the angles, shape (A, 2)."""
    l = int(round(abs(k + 0.5) - 0.5))
    upper = math.sqrt(abs(k - m_k + 0.5)) * spherical_harmonic(l, int(round(m_k - 0.5)), polar, azimuth)
    lower = math.copysign(1.0, -k) * math.sqrt(abs(k + m_k + 0.5))
    lower_values = lower * spherical_harmonic(l, int(round(m_k + 0.5)), polar, azimuth)
    return np.stack([upper, lower_values], axis=-1) / math.sqrt(abs(2 * k + 1))


def angular_basis(index: WaveIndex, component: int, angles: np.ndarray) -> np.ndarray:
    """
    Sample Xi^component_index at the angles.

    Args:
        index: channel; for n = 3 it must carry m_k
        component: +1 or -1
        angles: theta values (n = 2, shape (A,)) or (polar, azimuth) pairs (n = 3, shape (A, 2))

    Returns:
        Complex array of shape (A, 2) for n = 2 and (A, 4) for n = 3.
    """
    if component not in (1, -1):
        raise InvalidIndexError(f"component must be +1 or -1, got {component}")
    angles = np.asarray(angles, dtype=float)
    if index.n == 2:
        theta = angles.reshape(-1)
        exponent = index.k - 0.5 * component
        wave = np.exp(1j * exponent * theta) / math.sqrt(2.0 * math.pi)
        out = np.zeros((theta.size, 2), dtype=complex)
        out[:, 0 if component == 1 else 1] = wave
        return out
    if index.m_k is None:
        raise InvalidIndexError("n=3 angular basis needs m_k", details={"k": index.k})
    pairs = angles.reshape(-1, 2)
    k = int(round(index.k))
    out = np.zeros((pairs.shape[0], 4), dtype=complex)
    if component == 1:
        out[:, :2] = 1j * spinor_harmonic(k, index.m_k, pairs[:, 0], pairs[:, 1])
    else:
        out[:, 2:] = spinor_harmonic(-k, index.m_k, pairs[:, 0], pairs[:, 1])
    return out


@dataclass(frozen=True, eq=False)
class AngularSample:
    """One basis element sampled on an angular set."""

    index: WaveIndex
    component: int
    value: np.ndarray


@dataclass(frozen=True, eq=False)
class AngularQuadrature:
    angles: np.ndarray
    weights: np.ndarray


def angular_quadrature(n: int, k_max: float) -> AngularQuadrature:
    """Trapezoid in theta (n=2); Gauss-Legendre in cos(polar) x trapezoid in azimuth (n=3)."""
    band = math.ceil(k_max)
    azimuths = 4 * band + 8
    theta = 2.0 * math.pi * np.arange(azimuths) / azimuths
    theta_weights = np.full(azimuths, 2.0 * math.pi / azimuths)
    if n == 2:
        return AngularQuadrature(angles=theta, weights=theta_weights)
    x, wx = legendre.leggauss(2 * band + 4)
    polar = np.arccos(x)
    angles = np.stack(np.meshgrid(polar, theta, indexing="ij"), axis=-1).reshape(-1, 2)
    weights = np.outer(wx, theta_weights).ravel()
    return AngularQuadrature(angles=angles, weights=weights)


def channel_indices(n: int, k_max: float | None = None) -> list[WaveIndex]:
    """All channels up to |k| <= k_max in canonical order (3D channels carry every m_k)."""
    k_max = DEFAULT_K_MAX[n] if k_max is None else k_max
    indices: list[WaveIndex] = []
    k = 0.5 if n == 2 else 1.0
    while k <= k_max + 1e-12:
        for signed in (k, -k):
            if n == 2:
                indices.append(WaveIndex(2, signed))
            else:
                m = -k + 0.5
                while m <= k - 0.5 + 1e-12:
                    indices.append(WaveIndex(3, signed, m))
                    m += 1.0
        k += 1.0
    return indices


def basis_samples(n: int, k_max: float, angles: np.ndarray) -> list[AngularSample]:
    return [
        AngularSample(index=index, component=component, value=angular_basis(index, component, angles))
        for index in channel_indices(n, k_max)
        for component in (1, -1)
    ]


def is_dirac_radial_index(index: WaveIndex) -> bool:
    return abs(abs(index.k) - (0.5 if index.n == 2 else 1.0)) < 1e-12


# --- channel fields -----------------------------------------------------------------------------


def _complex_pairs(values: np.ndarray) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in values]


def _field_schema(grid_key: str) -> dict[str, Any]:
    pair_array = {
        "type": "array",
        "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    }
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["n", grid_key, "channels"],
        "properties": {
            "n": {"type": "integer", "enum": [2, 3]},
            grid_key: {
                "type": "object",
                "additionalProperties": False,
                "required": ["nodes", "weights"],
                "properties": {
                    "nodes": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                    "weights": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                    "panels": {"type": "array", "items": {"type": "number"}},
                    "order": {"type": "integer", "minimum": 0},
                    "log_uniform": {"type": "boolean"},
                },
            },
            "channels": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["k", "f_plus", "f_minus"],
                    "properties": {
                        "k": {"type": "number"},
                        "m_k": {"type": ["number", "null"]},
                        "f_plus": pair_array,
                        "f_minus": pair_array,
                    },
                },
            },
        },
    }


@dataclass(frozen=True, eq=False)
class ChannelField:
    """Per-channel pairs of complex profiles on a radial grid."""

    GRID_KEY: ClassVar[str] = "grid"

    n: int
    grid: RadialGrid
    channels: dict[WaveIndex, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for index, (plus, minus) in self.channels.items():
            if index.n != self.n:
                raise InvalidIndexError(f"channel {index.label} has dimension {index.n}, field has {self.n}")
            if self.n == 3 and index.m_k is None:
                raise InvalidIndexError(f"3D channel {index.label} needs an explicit m_k")
            if plus.shape != (self.grid.size,) or minus.shape != (self.grid.size,):
                raise DataValidationError(
                    f"profile length does not match the grid for {index.label}",
                    details={"grid": self.grid.size, "plus": plus.shape, "minus": minus.shape},
                )

    @property
    def indices(self) -> list[WaveIndex]:
        return sorted(self.channels, key=lambda index: index.sort_key)

    def channel_norm(self, index: WaveIndex) -> float:
        plus, minus = self.channels[index]
        measure = self.grid.measure(self.n)
        return math.sqrt(float(np.sum((np.abs(plus) ** 2 + np.abs(minus) ** 2) * measure)))

    def norm(self) -> float:
        return math.sqrt(sum(self.channel_norm(index) ** 2 for index in self.indices))

    def inner(self: FieldT, other: FieldT) -> complex:
        """<self, other>, conjugate-linear in self."""
        measure = self.grid.measure(self.n)
        total = 0j
        for index in self.indices:
            if index in other.channels:
                a_plus, a_minus = self.channels[index]
                b_plus, b_minus = other.channels[index]
                total += complex(np.sum((np.conj(a_plus) * b_plus + np.conj(a_minus) * b_minus) * measure))
        return total

    def with_channels(self: FieldT, channels: dict[WaveIndex, tuple[np.ndarray, np.ndarray]]) -> FieldT:
        return type(self)(self.n, self.grid, channels)

    def scaled(self: FieldT, factor: complex) -> FieldT:
        return self.with_channels({i: (factor * p, factor * m) for i, (p, m) in self.channels.items()})

    def linear_combination(self: FieldT, a: complex, other: FieldT, b: complex) -> FieldT:
        """a * self + b * other on the union of channels."""
        zeros = np.zeros(self.grid.size, dtype=complex)
        channels = {}
        for index in sorted(set(self.channels) | set(other.channels), key=lambda i: i.sort_key):
            p1, m1 = self.channels.get(index, (zeros, zeros))
            p2, m2 = other.channels.get(index, (zeros, zeros))
            channels[index] = (a * p1 + b * p2, a * m1 + b * m2)
        return self.with_channels(channels)

    def restricted(self: FieldT, keep: Callable[[WaveIndex], bool]) -> FieldT:
        return self.with_channels({i: v for i, v in self.channels.items() if keep(i)})

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            self.GRID_KEY: self.grid.to_dict(),
            "channels": [
                {
                    **index.to_dict(),
                    "f_plus": _complex_pairs(self.channels[index][0]),
                    "f_minus": _complex_pairs(self.channels[index][1]),
                }
                for index in self.indices
            ],
        }

    @classmethod
    def from_dict(cls: type[FieldT], payload: dict[str, Any]) -> FieldT:
        errors = sorted(Draft7Validator(_field_schema(cls.GRID_KEY)).iter_errors(payload), key=lambda e: e.path)
        if errors:
            raise DataValidationError(
                f"invalid {cls.__name__} document: {errors[0].message}",
                details={"errors": [e.message for e in errors]},
            )
        n = int(payload["n"])
        grid = RadialGrid.from_dict(payload[cls.GRID_KEY])
        channels = {}
        for entry in payload["channels"]:
            index = WaveIndex.from_dict(n, entry)
            plus = np.array([complex(re, im) for re, im in entry["f_plus"]], dtype=complex)
            minus = np.array([complex(re, im) for re, im in entry["f_minus"]], dtype=complex)
            channels[index] = (plus, minus)
        return cls(n, grid, channels)

    def save(self, path: str | Path) -> None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls: type[FieldT], path: str | Path) -> FieldT:
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


class PartialWaveField(ChannelField):
    """A spinor field in the partial-wave representation over r."""


def single_channel_field(
    index: WaveIndex, grid: RadialGrid, f_plus: np.ndarray, f_minus: np.ndarray | None = None
) -> PartialWaveField:
    minus = np.zeros(grid.size, dtype=complex) if f_minus is None else np.asarray(f_minus, dtype=complex)
    return PartialWaveField(index.n, grid, {index: (np.asarray(f_plus, dtype=complex), minus)})


def dilate(pwf: FieldT, factor: float) -> FieldT:
    """u(x) -> factor^(-n/2) u(x / factor) on the dilated grid (L^2 preserving)."""
    scale = factor ** (-pwf.n / 2.0)
    return type(pwf)(
        pwf.n, pwf.grid.scaled(factor), {i: (scale * p, scale * m) for i, (p, m) in pwf.channels.items()}
    )


def decompose(
    n: int,
    grid: RadialGrid,
    field_sampler: FieldSampler,
    k_max: float | None = None,
    drop_tolerance: float = DROP_TOLERANCE,
) -> PartialWaveField:
    """
    Project a sampled spinor field on the channels up to k_max.

    Args:
        field_sampler: (r of shape (R,), angles of shape (A,) or (A, 2)) -> spinors of shape (R, A, N)
        drop_tolerance: channels whose norm is below this fraction of the field norm are omitted

    Logs a warning when more than 1% of the angular energy lies beyond k_max.
    """
    k_max = DEFAULT_K_MAX[n] if k_max is None else k_max
    quadrature = angular_quadrature(n, k_max)
    samples = np.asarray(field_sampler(grid.nodes, quadrature.angles), dtype=complex)
    width = 2 if n == 2 else 4
    expected = (grid.size, quadrature.weights.size, width)
    if samples.shape != expected:
        raise DataValidationError("field sampler returned the wrong shape", details={"shape": samples.shape})
    if not np.all(np.isfinite(samples)):
        raise DataValidationError("field sampler returned non-finite values")

    weighted = samples * quadrature.weights[None, :, None]
    coefficients: dict[WaveIndex, list[np.ndarray]] = {}
    for sample in basis_samples(n, k_max, quadrature.angles):
        profile = np.einsum("ran,an->r", weighted, np.conj(sample.value))
        coefficients.setdefault(sample.index, [np.zeros(grid.size, complex), np.zeros(grid.size, complex)])
        coefficients[sample.index][0 if sample.component == 1 else 1] = profile

    measure = grid.measure(n)
    total = float(np.sum(np.sum(np.abs(samples) ** 2 * quadrature.weights[None, :, None], axis=(1, 2)) * measure))
    captured = sum(
        float(np.sum((np.abs(p) ** 2 + np.abs(m) ** 2) * measure)) for p, m in coefficients.values()
    )
    if total > 0 and (total - captured) / total > ALIASING_THRESHOLD:
        log_event(
            logger,
            "decompose",
            "aliasing",
            level=logging.WARNING,
            residual_fraction=(total - captured) / total,
            k_max=k_max,
        )

    threshold = drop_tolerance * math.sqrt(max(captured, 0.0))
    channels = {}
    for index, (plus, minus) in coefficients.items():
        if math.sqrt(float(np.sum((np.abs(plus) ** 2 + np.abs(minus) ** 2) * measure))) > threshold:
            channels[index] = (plus, minus)
    return PartialWaveField(n, grid, channels)


def reconstruct(pwf: PartialWaveField, angles: np.ndarray) -> np.ndarray:
    """Field samples of shape (R, A, N) from the channel profiles."""
    width = 2 if pwf.n == 2 else 4
    angles = np.asarray(angles, dtype=float)
    count = angles.size if pwf.n == 2 else angles.reshape(-1, 2).shape[0]
    out = np.zeros((pwf.grid.size, count, width), dtype=complex)
    for index in pwf.indices:
        plus, minus = pwf.channels[index]
        out += plus[:, None, None] * angular_basis(index, 1, angles)[None, :, :]
        out += minus[:, None, None] * angular_basis(index, -1, angles)[None, :, :]
    return out


def _check_support(profile: np.ndarray, name: str) -> None:
    scale = float(np.max(np.abs(profile))) if profile.size else 0.0
    if scale == 0.0:
        return
    edge = max(float(np.max(np.abs(profile[:2]))), float(np.max(np.abs(profile[-2:]))))
    if edge > SUPPORT_TOLERANCE * scale:
        raise SupportError(
            f"{name} does not vanish at the grid ends",
            details={"edge_ratio": edge / scale, "tolerance": SUPPORT_TOLERANCE},
        )


def apply_radial_dirac(
    channel: EigenChannel, f_plus: np.ndarray, f_minus: np.ndarray, grid: RadialGrid
) -> tuple[np.ndarray, np.ndarray]:
    """
    Apply d_{nu,k}:

        g+ = -nu/r f+ + (-(d/dr + (n-1)/(2r)) + k/r) f-
        g- = (d/dr + (n-1)/(2r) + k/r) f+ - nu/r f-

    Raises:
        SupportError: a profile is not negligible at either end of the grid
    """
    f_plus = np.asarray(f_plus, dtype=complex)
    f_minus = np.asarray(f_minus, dtype=complex)
    _check_support(f_plus, "f_plus")
    _check_support(f_minus, "f_minus")
    r = grid.nodes
    shift = (channel.n - 1) / (2.0 * r)
    g_plus = -channel.nu / r * f_plus - (grid.differentiate(f_minus) + shift * f_minus) + channel.k / r * f_minus
    g_minus = grid.differentiate(f_plus) + shift * f_plus + channel.k / r * f_plus - channel.nu / r * f_minus
    return g_plus, g_minus


def project_dirac_radial(pwf: FieldT) -> FieldT:
    """Keep the lowest channels, |k| = 1/2 (n=2) or |k| = 1 (n=3)."""
    return pwf.restricted(is_dirac_radial_index)


def project_dirac_nonradial(pwf: FieldT) -> FieldT:
    """Drop the lowest channels."""
    return pwf.restricted(lambda index: not is_dirac_radial_index(index))
