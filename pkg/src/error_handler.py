"""Exception hierarchy and per-campaign error collection."""

from __future__ import annotations

import logging
import traceback
from typing import Any

logger = logging.getLogger(__name__)


class DiracCoulombError(Exception):
    """Base exception for all library errors."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigurationError(DiracCoulombError):
    """Raised when a campaign configuration is invalid or missing."""

    pass


class DataValidationError(DiracCoulombError):
    """Raised when data validation fails."""

    pass


class InvalidIndexError(DataValidationError):
    """Raised when a partial-wave index is not valid for its dimension."""

    pass


class PoleError(DiracCoulombError):
    """Raised when the gamma function is evaluated at a pole."""

    pass


class ConvergenceError(DiracCoulombError):
    """Raised when neither the series nor the asymptotic expansion reaches the accuracy target."""

    def __init__(self, message: str, count: int = 0, details: dict[str, Any] | None = None):
        super().__init__(message, details)
        self.count = count


class CouplingError(DiracCoulombError):
    """Raised when the coupling is outside the range a computation is valid for."""

    def __init__(self, message: str, nu: float, bound: float, details: dict[str, Any] | None = None):
        super().__init__(message, details)
        self.nu = nu
        self.bound = bound


class SupportError(DiracCoulombError):
    """Raised when a profile does not vanish at the grid ends."""

    pass


class TruncationError(DiracCoulombError):
    """Raised when a profile carries too much mass in the outermost panel."""

    def __init__(self, message: str, tail_fraction: float, details: dict[str, Any] | None = None):
        super().__init__(message, details)
        self.tail_fraction = tail_fraction


class RadialityError(DiracCoulombError):
    """Raised when a field populates channels the operation does not accept."""

    pass


class NonContractionError(DiracCoulombError):
    """Raised when the Picard map stops contracting."""

    def __init__(self, message: str, factors: list[float], details: dict[str, Any] | None = None):
        super().__init__(message, details)
        self.factors = factors


class ZeroDatumError(DiracCoulombError):
    """Raised when a ratio is requested for a zero datum."""

    pass


class ErrorReporter:
    """Collects acceptance failures and warnings for one campaign."""

    def __init__(self) -> None:
        self.errors: list[dict[str, Any]] = []
        self.warnings: list[dict[str, Any]] = []

    def add_error(
        self,
        message: str,
        error: Exception | None = None,
        context: dict[str, Any] | None = None,
    ) -> None:
        error_info: dict[str, Any] = {
            "message": message,
            "type": type(error).__name__ if error else "AcceptanceFailure",
            "details": str(error) if error else "",
            "context": context or {},
        }
        if error:
            error_info["traceback"] = traceback.format_exception(type(error), error, error.__traceback__)

        self.errors.append(error_info)
        logger.error("Error: %s - %s", message, error_info["details"], extra={"context": context})

    def add_gate_failure(self, check: dict[str, Any]) -> None:
        """Record a failed acceptance check as produced by ``ReportGenerator.add_check``."""
        self.add_error(
            f"acceptance gate failed: {check['case']}",
            context={"value": check["value"], "tolerance": check["tolerance"]},
        )

    def add_warning(self, message: str, context: dict[str, Any] | None = None) -> None:
        self.warnings.append({"message": message, "context": context or {}})
        logger.warning("Warning: %s", message, extra={"context": context})

    def has_errors(self) -> bool:
        return len(self.errors) > 0

    def to_dict(self) -> dict[str, Any]:
        # tracebacks stay out of reports so reruns are byte-identical
        return {
            "errors": [{k: v for k, v in e.items() if k != "traceback"} for e in self.errors],
            "warnings": list(self.warnings),
        }

    def get_summary(self) -> str:
        lines = []

        if self.errors:
            lines.append(f"{len(self.errors)} error(s):")
            for i, error in enumerate(self.errors, 1):
                lines.append(f"  {i}. {error['message']}")
                if error["details"]:
                    lines.append(f"     Details: {error['details']}")

        if self.warnings:
            lines.append(f"{len(self.warnings)} warning(s):")
            for i, warning in enumerate(self.warnings, 1):
                lines.append(f"  {i}. {warning['message']}")

        if not self.errors and not self.warnings:
            lines.append("No errors or warnings")

        return "\n".join(lines)
