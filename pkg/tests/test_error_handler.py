"""Tests for error handling module."""

from __future__ import annotations

from src.error_handler import (
    ConfigurationError,
    CouplingError,
    DataValidationError,
    DiracCoulombError,
    ErrorReporter,
    InvalidIndexError,
    NonContractionError,
    TruncationError,
)


class TestExceptions:
    """Test custom exception classes."""

    def test_base_error(self):
        error = DiracCoulombError("Test error", details={"key": "value"})
        assert str(error) == "Test error"
        assert error.message == "Test error"
        assert error.details == {"key": "value"}

    def test_configuration_error(self):
        error = ConfigurationError("Invalid config")
        assert isinstance(error, DiracCoulombError)
        assert error.details == {}

    def test_invalid_index_is_validation_error(self):
        assert isinstance(InvalidIndexError("bad k"), DataValidationError)

    def test_coupling_error_carries_bound(self):
        error = CouplingError("too strong", nu=0.7, bound=0.5)
        assert error.nu == 0.7
        assert error.bound == 0.5

    def test_truncation_error_carries_fraction(self):
        assert TruncationError("tail", tail_fraction=1e-3).tail_fraction == 1e-3

    def test_non_contraction_error_carries_factors(self):
        error = NonContractionError("diverging", factors=[0.5, 1.2, 1.3, 1.4])
        assert error.factors[-1] == 1.4


class TestErrorReporter:
    """Test ErrorReporter class."""

    def test_add_error(self):
        reporter = ErrorReporter()
        reporter.add_error("gate failed", context={"value": 0.2})

        assert reporter.has_errors()
        assert reporter.errors[0]["type"] == "AcceptanceFailure"
        assert reporter.errors[0]["context"] == {"value": 0.2}

    def test_add_error_with_exception(self):
        reporter = ErrorReporter()
        try:
            raise NonContractionError("diverging", factors=[2.0])
        except NonContractionError as e:
            reporter.add_error("picard failed", e)

        assert reporter.errors[0]["type"] == "NonContractionError"
        assert reporter.errors[0]["details"] == "diverging"
        assert "traceback" in reporter.errors[0]
        assert "traceback" not in reporter.to_dict()["errors"][0]

    def test_gate_failure(self):
        reporter = ErrorReporter()
        reporter.add_gate_failure({"case": "mass_drift", "value": 0.2, "tolerance": 0.01, "pass": False})

        assert reporter.errors[0]["message"] == "acceptance gate failed: mass_drift"
        assert reporter.errors[0]["context"] == {"value": 0.2, "tolerance": 0.01}

    def test_warnings_and_summary(self):
        reporter = ErrorReporter()
        reporter.add_error("first")
        reporter.add_warning("careful", {"p": 3.0})

        summary = reporter.get_summary()
        assert "1 error(s):" in summary
        assert "1 warning(s):" in summary
        assert reporter.to_dict()["warnings"] == [{"message": "careful", "context": {"p": 3.0}}]

    def test_empty_summary(self):
        reporter = ErrorReporter()
        assert reporter.get_summary() == "No errors or warnings"
        assert not reporter.has_errors()
        assert reporter.to_dict() == {"errors": [], "warnings": []}
