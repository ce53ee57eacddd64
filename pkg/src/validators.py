"""
Input Validation Helpers
Provides validation functions for campaign parameters: dimensions, couplings, exponents, ranges and kernel specs.
"""

from __future__ import annotations

import math
import re
from typing import Any

from src.eigen import coupling_bound_text
from src.error_handler import DataValidationError
from src.utils import parse_range, parse_scalar

KERNEL_SPEC_RE = re.compile(r"^(yukawa|bracket|table):\S+$")
TIME_RE = re.compile(r"^(auto|[0-9.eE+-]+)$")


def validate_dimension(n: Any) -> int:
    """
    Validate a spatial dimension.

    Args:
        n: Dimension to validate

    Returns:
        The dimension as an integer (2 or 3)

    Raises:
        DataValidationError: If n is not 2 or 3
    """
    if n not in (2, 3) or isinstance(n, bool):
        raise DataValidationError("dimension n must be 2 or 3", details={"n": n})
    return int(n)


def validate_coupling(n: int, nu: Any, bound: float | None = None, bound_text: str | None = None) -> float:
    """
    Validate a Coulomb coupling against the range of its dimension.

    Args:
        n: Dimension (2 or 3)
        nu: Coupling to validate
        bound: Override for the admissible |nu| (default (n-1)/2)
        bound_text: Printable form of the override bound

    Returns:
        The coupling as a float

    Raises:
        DataValidationError: If nu is not a finite number or |nu| exceeds the bound
    """
    try:
        value = float(nu)
    except (TypeError, ValueError) as e:
        raise DataValidationError("coupling nu must be a number", details={"nu": nu, "error": str(e)})
    if not math.isfinite(value):
        raise DataValidationError("coupling nu must be finite", details={"nu": nu})

    limit = (n - 1) / 2.0 if bound is None else bound
    text = coupling_bound_text(n) if bound is None else (bound_text or f"{bound:g}")
    if abs(value) > limit:
        raise DataValidationError(
            f"coupling |nu| = {abs(value):g} exceeds the bound |nu| <= {text} for n = {n}",
            details={"n": n, "nu": value, "bound": limit},
        )
    return value


def validate_exponent(value: Any, name: str = "exponent") -> float:
    """
    Validate a Lebesgue exponent in [2, inf].

    Args:
        value: Number, or a string such as "inf"
        name: Name of the value (for error messages)

    Returns:
        The exponent as a float

    Raises:
        DataValidationError: If the exponent is outside [2, inf]
    """
    try:
        exponent = parse_scalar(value) if isinstance(value, str) else float(value)
    except (TypeError, ValueError) as e:
        raise DataValidationError(f"{name} must be a number or inf", details={"value": value, "error": str(e)})
    if math.isnan(exponent) or exponent < 2.0:
        raise DataValidationError(f"{name} must lie in [2, inf]", details={"value": exponent})
    return exponent


def validate_window(lo: float, hi: float, name: str = "window") -> tuple[float, float]:
    """
    Validate a positive interval.

    Returns:
        (lo, hi)

    Raises:
        DataValidationError: If not 0 < lo < hi
    """
    if not 0 < lo < hi:
        raise DataValidationError(f"{name} needs 0 < min < max", details={"min": lo, "max": hi})
    return lo, hi


def validate_range_text(text: Any, name: str = "range") -> tuple[float, float, bool]:
    """
    Validate a range literal such as `1e-3..100` or `2^-6..2^6`.

    Returns:
        (lo, hi, dyadic) as produced by parse_range

    Raises:
        DataValidationError: If the literal cannot be parsed or the range is not positive
    """
    if not isinstance(text, str):
        raise DataValidationError(f"{name} must be a range literal", details={"value": text})
    try:
        lo, hi, dyadic = parse_range(text)
    except ValueError as e:
        raise DataValidationError(f"{name}: {e}", details={"value": text})
    validate_window(lo, hi, name)
    return lo, hi, dyadic


def validate_order(order: Any, minimum: int = 8) -> int:
    """Validate a Gauss-Legendre panel order."""
    if isinstance(order, bool) or not isinstance(order, int) or order < minimum:
        raise DataValidationError(f"panel order must be an integer >= {minimum}", details={"order": order})
    return order


def validate_kernel_spec(spec: Any) -> str:
    """
    Validate the shape of a convolution kernel spec.

    Args:
        spec: "yukawa:b=1,c=1", "bracket:alpha=2" or "table:<path>"

    Returns:
        The stripped kernel string

    Raises:
        DataValidationError: If the kernel string has no known kind prefix
    """
    if not isinstance(spec, str) or not KERNEL_SPEC_RE.match(spec.strip()):
        raise DataValidationError(
            "kernel spec must look like yukawa:b=1,c=1, bracket:alpha=2 or table:<path>", details={"spec": spec}
        )
    return spec.strip()


def validate_time(value: Any) -> float | None:
    """
    Validate a final time given as `auto` or a positive number.

    Returns:
        None for auto, the time otherwise

    Raises:
        DataValidationError: If the value is neither auto nor a positive number
    """
    text = str(value).strip()
    if text == "auto":
        return None
    try:
        t = float(text)
    except ValueError as e:
        raise DataValidationError("T must be auto or a positive number", details={"value": value, "error": str(e)})
    if not (t > 0 and math.isfinite(t)):
        raise DataValidationError("T must be auto or a positive number", details={"value": value})
    return t


def validate_choice(value: Any, choices: list[Any] | tuple[Any, ...], name: str = "value") -> Any:
    """
    Validate that a value is one of the allowed choices.

    Raises:
        DataValidationError: If value is not in choices
    """
    if value not in choices:
        raise DataValidationError(
            f"{name} must be one of: {', '.join(str(c) for c in choices)}",
            details={"value": value, "choices": list(choices)},
        )
    return value


def validate_positive_int(value: Any, name: str = "value", min_value: int = 1) -> int:
    """
    Validate that a value is an integer of at least min_value.

    Raises:
        DataValidationError: If value is not such an integer
    """
    try:
        int_value = int(value)
    except (TypeError, ValueError) as e:
        raise DataValidationError(f"{name} must be an integer", details={"value": value, "error": str(e)})

    if int_value < min_value:
        raise DataValidationError(
            f"{name} must be at least {min_value}",
            details={"value": int_value, "min_value": min_value},
        )
    return int_value


class Validator:
    """Collects validation failures for one config section without stopping at the first."""

    def __init__(self, section: str):
        self.section = section
        self.errors: list[str] = []

    def check(self, func: Any, *args: Any, **kwargs: Any) -> Any:
        """Run one validator; record its message on failure and return None."""
        try:
            return func(*args, **kwargs)
        except DataValidationError as e:
            self.errors.append(f"{self.section}: {e.message}")
            return None

    def require(self, condition: bool, message: str) -> Validator:
        if not condition:
            self.errors.append(f"{self.section}: {message}")
        return self
