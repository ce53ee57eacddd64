"""
Complex Special Functions
Gamma on the complex plane, Kummer's confluent hypergeometric function 1F1 and a Bessel J oracle.

Accuracy targets:
    gamma_complex   ~1e-13 relative on Re z > 0 (Lanczos, g = 7, nine coefficients), reflection below.
    hyp1f1          1e-10 relative for |z| < SERIES_CROSSOVER (Taylor series), 1e-8 relative to the
                    envelope above it (DLMF 13.7.2 two-sided asymptotic expansion, optimally truncated).
    bessel_j        ascending series in mpmath for x <= max(25, order**2), Hankel expansion beyond.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from src.error_handler import ConvergenceError, DataValidationError, PoleError
from src.logging_utils import log_event

logger = logging.getLogger(__name__)

# Plain Python complex numbers carry the (re, im) pair.
ComplexValue = complex

SERIES_CROSSOVER = 30.0
SERIES_TARGET = 1e-10
ASYMPTOTIC_TARGET = 1e-8
MAX_SERIES_TERMS = 500
MAX_ASYMPTOTIC_TERMS = 200
SERIES_CHUNK = 2048
RESCUE_DIGITS = 32

LANCZOS_G = 7
LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

BESSEL_MIN_CROSSOVER = 25.0

if np.finfo(np.longdouble).eps < 1e-17:
    _WORK_DTYPE: type = np.clongdouble
else:
    _WORK_DTYPE = np.complex128
_WORK_DIGITS = -math.log10(float(np.finfo(np.real(np.zeros(1, dtype=_WORK_DTYPE)).dtype).eps))


@dataclass(frozen=True)
class SeriesDiagnostics:
    """How a single 1F1 value was obtained."""

    terms_used: int
    max_term_magnitude: float
    cancellation_digits: float
    branch: str = "series"


@dataclass(frozen=True)
class DiagnosticsArray:
    """Element-wise diagnostics for a vectorized 1F1 evaluation."""

    terms_used: np.ndarray
    max_term_magnitude: np.ndarray
    cancellation_digits: np.ndarray
    asymptotic: np.ndarray

    def at(self, i: int) -> SeriesDiagnostics:
        return SeriesDiagnostics(
            terms_used=int(self.terms_used.flat[i]),
            max_term_magnitude=float(self.max_term_magnitude.flat[i]),
            cancellation_digits=float(self.cancellation_digits.flat[i]),
            branch="asymptotic" if bool(self.asymptotic.flat[i]) else "series",
        )


def is_pole(z: complex) -> bool:
    """True at the non-positive integers."""
    z = complex(z)
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def gamma_complex(z: ComplexValue) -> ComplexValue:
    """
    Gamma function of a complex argument.

    Raises:
        PoleError: at z = 0, -1, -2, ...
    """
    z = complex(z)
    if is_pole(z):
        raise PoleError(f"gamma has a pole at {z.real:g}", details={"z": z.real})
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * gamma_complex(1.0 - z))
    z -= 1.0
    x = LANCZOS_COEFFICIENTS[0]
    for i, coefficient in enumerate(LANCZOS_COEFFICIENTS[1:], start=1):
        x += coefficient / (z + i)
    t = z + LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * cmath.exp(-t) * x


def loggamma_complex(z: ComplexValue) -> ComplexValue:
    """log Gamma(z) on some branch; only exponentiated by callers."""
    z = complex(z)
    if is_pole(z):
        raise PoleError(f"log-gamma has a pole at {z.real:g}", details={"z": z.real})
    if z.real < 0.5:
        return math.log(math.pi) - cmath.log(cmath.sin(math.pi * z)) - loggamma_complex(1.0 - z)
    z -= 1.0
    x = LANCZOS_COEFFICIENTS[0]
    for i, coefficient in enumerate(LANCZOS_COEFFICIENTS[1:], start=1):
        x += coefficient / (z + i)
    t = z + LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


def _check_parameters(b: complex) -> None:
    if is_pole(b):
        raise DataValidationError("1F1 is undefined for non-positive integer b", details={"b": b.real})


def _series_chunk(a: complex, b: complex, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    zz = z.astype(_WORK_DTYPE)
    aa = _WORK_DTYPE(a)
    bb = _WORK_DTYPE(b)
    eps = float(np.finfo(zz.real.dtype).eps)

    term = np.ones(zz.shape, dtype=_WORK_DTYPE)
    total = np.ones(zz.shape, dtype=_WORK_DTYPE)
    biggest = np.ones(zz.shape, dtype=float)
    terms_used = np.ones(zz.shape, dtype=np.int64)
    quiet = np.zeros(zz.shape, dtype=np.int64)
    active = np.ones(zz.shape, dtype=bool)

    for n in range(MAX_SERIES_TERMS):
        if not active.any():
            break
        term = term * ((aa + n) / ((bb + n) * (n + 1))) * zz
        total = np.where(active, total + term, total)
        magnitude = np.abs(term).astype(float)
        biggest = np.where(active, np.maximum(biggest, magnitude), biggest)
        terms_used += active
        small = magnitude <= eps * np.abs(total).astype(float)
        quiet = np.where(small, quiet + 1, 0)
        active &= quiet < 2

    if active.any():
        raise ConvergenceError(
            "1F1 Taylor series did not converge",
            count=int(active.sum()),
            details={"a": str(a), "b": str(b), "max_abs_z": float(np.abs(z[active]).max())},
        )
    return total.astype(np.complex128), terms_used, biggest


def _taylor_series(a: complex, b: complex, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    values = np.empty(z.shape, dtype=np.complex128)
    terms = np.empty(z.shape, dtype=np.int64)
    biggest = np.empty(z.shape, dtype=float)
    # chunks of similar |z| stop together
    order = np.argsort(np.abs(z), kind="stable")
    for start in range(0, order.size, SERIES_CHUNK):
        idx = order[start : start + SERIES_CHUNK]
        values[idx], terms[idx], biggest[idx] = _series_chunk(a, b, z[idx])
    return values, terms, biggest


def _log_reciprocal_gamma(z: complex) -> complex | None:
    if is_pole(z):
        return None
    return -loggamma_complex(z)


def _asymptotic_series(a: complex, b: complex, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    eps = float(np.finfo(float).eps)
    log_gamma_b = loggamma_complex(b)
    rgamma_a = _log_reciprocal_gamma(a)
    rgamma_ba = _log_reciprocal_gamma(b - a)

    phase = np.angle(z)
    expfac = np.where(phase > -np.pi / 2, cmath.exp(1j * math.pi * a), cmath.exp(-1j * math.pi * a))
    if rgamma_a is None:
        c1 = np.zeros(z.shape, dtype=np.complex128)
    else:
        c1 = np.exp(log_gamma_b + rgamma_a + z) * z ** (a - b)
    if rgamma_ba is None:
        c2 = np.zeros(z.shape, dtype=np.complex128)
    else:
        c2 = np.exp(log_gamma_b + rgamma_ba) * z ** (-a) * expfac

    a1 = np.ones(z.shape, dtype=np.complex128)
    a2 = np.ones(z.shape, dtype=np.complex128)
    s1 = np.ones(z.shape, dtype=np.complex128)
    s2 = np.ones(z.shape, dtype=np.complex128)
    best1 = s1.copy()
    best2 = s2.copy()
    best_size = np.abs(c1) + np.abs(c2)
    best_terms = np.ones(z.shape, dtype=np.int64)
    biggest = np.abs(c1 + c2)
    active = np.ones(z.shape, dtype=bool)

    for i in range(1, MAX_ASYMPTOTIC_TERMS):
        if not active.any():
            break
        a1 = a1 * (i - a) * (b - a + i - 1) / (z * i)
        a2 = a2 * -(a + i - 1) * (a - b + i) / (z * i)
        s1 = np.where(active, s1 + a1, s1)
        s2 = np.where(active, s2 + a2, s2)
        size = np.abs(c1 * a1) + np.abs(c2 * a2)
        improved = active & (size < best_size)
        best_size = np.where(improved, size, best_size)
        best1 = np.where(improved, s1, best1)
        best2 = np.where(improved, s2, best2)
        best_terms = np.where(improved, i + 1, best_terms)
        biggest = np.where(active & np.isfinite(size), np.maximum(biggest, size), biggest)
        envelope = np.abs(c1 * s1) + np.abs(c2 * s2)
        converged = size <= eps * envelope
        # past the smallest term once it has grown by three orders
        active &= ~converged & np.isfinite(size) & (size <= 1e3 * best_size)

    values = c1 * best1 + c2 * best2
    envelope = np.abs(c1 * best1) + np.abs(c2 * best2)
    relative_error = best_size / np.where(envelope > 0, envelope, 1.0)
    failed = relative_error > ASYMPTOTIC_TARGET
    if failed.any():
        raise ConvergenceError(
            "1F1 asymptotic expansion did not reach the accuracy target",
            count=int(failed.sum()),
            details={"a": str(a), "b": str(b), "worst_relative_error": float(relative_error.max())},
        )
    return values, best_terms, biggest


def _precision_rescue(a: complex, b: complex, z: np.ndarray, cancellation: np.ndarray) -> np.ndarray:
    values = np.empty(z.shape, dtype=np.complex128)
    for i, (zi, lost) in enumerate(zip(z, cancellation)):
        with mpmath.workdps(RESCUE_DIGITS + int(math.ceil(lost))):
            values[i] = complex(mpmath.hyp1f1(mpmath.mpc(a), mpmath.mpc(b), mpmath.mpc(complex(zi))))
    return values


def hyp1f1_array(a: ComplexValue, b: ComplexValue, z: np.ndarray) -> tuple[np.ndarray, DiagnosticsArray]:
    """
    Vectorized 1F1(a, b, z) over an array of z with per-element diagnostics.

    Raises:
        DataValidationError: b is a non-positive integer
        ConvergenceError: an element misses its accuracy target
    """
    a = complex(a)
    b = complex(b)
    _check_parameters(b)
    z_arr = np.asarray(z, dtype=np.complex128)
    flat = z_arr.ravel()
    if not np.all(np.isfinite(flat)):
        raise DataValidationError("1F1 argument must be finite")

    values = np.empty(flat.shape, dtype=np.complex128)
    terms = np.empty(flat.shape, dtype=np.int64)
    biggest = np.empty(flat.shape, dtype=float)
    large = np.abs(flat) >= SERIES_CROSSOVER
    small = ~large

    if small.any():
        values[small], terms[small], biggest[small] = _taylor_series(a, b, flat[small])
    if large.any():
        values[large], terms[large], biggest[large] = _asymptotic_series(a, b, flat[large])
        log_event(logger, "hyp1f1", "asymptotic", level=logging.DEBUG, count=int(large.sum()))

    magnitude = np.abs(values)
    with np.errstate(divide="ignore"):
        cancellation = np.where(magnitude > 0, np.log10(np.maximum(biggest, 1e-300) / magnitude), _WORK_DIGITS)
    cancellation = np.maximum(cancellation, 0.0)

    rescue = small & (cancellation > _WORK_DIGITS - (-math.log10(SERIES_TARGET)))
    if rescue.any():
        values[rescue] = _precision_rescue(a, b, flat[rescue], cancellation[rescue])
        log_event(logger, "hyp1f1", "precision_rescue", level=logging.DEBUG, count=int(rescue.sum()))

    diagnostics = DiagnosticsArray(
        terms_used=terms.reshape(z_arr.shape),
        max_term_magnitude=biggest.reshape(z_arr.shape),
        cancellation_digits=cancellation.reshape(z_arr.shape),
        asymptotic=large.reshape(z_arr.shape),
    )
    return values.reshape(z_arr.shape), diagnostics


def hyp1f1(a: ComplexValue, b: ComplexValue, z: ComplexValue) -> tuple[ComplexValue, SeriesDiagnostics]:
    """Kummer's function 1F1(a, b, z) with the diagnostics of its evaluation."""
    values, diagnostics = hyp1f1_array(a, b, np.array([complex(z)]))
    return complex(values[0]), diagnostics.at(0)


def hyp1f1_derivative_array(a: ComplexValue, b: ComplexValue, z: np.ndarray) -> np.ndarray:
    a = complex(a)
    b = complex(b)
    _check_parameters(b)
    values, _ = hyp1f1_array(a + 1.0, b + 1.0, z)
    return (a / b) * values


def hyp1f1_derivative(a: ComplexValue, b: ComplexValue, z: ComplexValue) -> ComplexValue:
    """d/dz 1F1(a, b, z) = (a/b) 1F1(a+1, b+1, z)."""
    return complex(hyp1f1_derivative_array(a, b, np.array([complex(z)]))[0])


def bessel_crossover(order: float) -> float:
    """Argument above which bessel_j switches to the Hankel expansion."""
    return max(BESSEL_MIN_CROSSOVER, order * order)


def _bessel_series(order: float, x: float) -> float:
    digits = 25 + int(x * math.log10(math.e))
    with mpmath.workdps(digits):
        half = mpmath.mpf(x) / 2
        term = half**order / mpmath.gamma(order + 1)
        total = term
        step = -half * half
        tolerance = mpmath.mpf(10) ** (-(digits - 5))
        k = 0
        while True:
            k += 1
            term = term * step / (k * (k + order))
            total += term
            if k > half and abs(term) <= tolerance * abs(total):
                break
        return float(total)


def _bessel_asymptotic(order: float, x: float) -> float:
    mu = 4.0 * order * order
    omega = x - (0.5 * order + 0.25) * math.pi
    p = 1.0
    q = 0.0
    term = 1.0
    previous = math.inf
    k = 0
    while k < 200:
        k += 1
        term *= (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if term == 0.0 or abs(term) >= previous:
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q += sign * term
        else:
            p += sign * term
        previous = abs(term)
        if previous < 1e-17:
            break
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(omega) - q * math.sin(omega))


def bessel_j(order: float, x: float) -> float:
    """
    Bessel function of the first kind J_order(x) for order >= 0, x >= 0.

    The ascending series is summed in mpmath with enough digits to absorb its cancellation up to
    bessel_crossover(order); beyond it the optimally truncated Hankel expansion is used.
    """
    if order < 0 or x < 0:
        raise DataValidationError("bessel_j needs order >= 0 and x >= 0", details={"order": order, "x": x})
    if x == 0.0:
        return 1.0 if order == 0 else 0.0
    if x <= bessel_crossover(order):
        return _bessel_series(order, x)
    return _bessel_asymptotic(order, x)
