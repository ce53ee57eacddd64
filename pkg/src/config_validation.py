from typing import Any

from jsonschema import Draft7Validator

from src.error_handler import ConfigurationError
from src.nonlinear import COUPLING_BOUND
from src.norms import RADIAL_CLASSES
from src.validators import (
    Validator,
    validate_coupling,
    validate_dimension,
    validate_exponent,
    validate_kernel_spec,
    validate_order,
    validate_range_text,
    validate_time,
    validate_window,
)

RANGE_PATTERN = r"^\s*\S+\s*\.\.\s*\S+\s*$"


def _int_schema(minimum: int = 0) -> dict[str, Any]:
    return {"type": "integer", "minimum": minimum}


def _number_schema(minimum: float | None = None, exclusive: bool = False) -> dict[str, Any]:
    schema: dict[str, Any] = {"type": "number"}
    if minimum is not None:
        schema["exclusiveMinimum" if exclusive else "minimum"] = minimum
    return schema


def _section(properties: dict[str, Any]) -> dict[str, Any]:
    return {"type": "object", "additionalProperties": False, "properties": properties}


_RANGE = {"type": "string", "pattern": RANGE_PATTERN}
_DIMENSION = {"type": "integer", "enum": [2, 3]}

_DATUM_PROPERTIES: dict[str, Any] = {
    "n": _DIMENSION,
    "nu": _number_schema(),
    "k": _number_schema(),
    "support": _RANGE,
    "r_max": _number_schema(0.0, exclusive=True),
    "rho_max": _number_schema(0.0, exclusive=True),
    "order": _int_schema(8),
    "t_max": _number_schema(0.0, exclusive=True),
    "time_nodes": _int_schema(2),
}

CAMPAIGN_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "general": _section(
            {
                "workers": _int_schema(1),
                "log_level": {"type": "string", "enum": ["DEBUG", "INFO", "WARNING", "ERROR"]},
                "json_logs": {"type": "boolean"},
                "uniformity_tolerance": _number_schema(0.0, exclusive=True),
                "baseline_tolerance": _number_schema(0.0, exclusive=True),
                "cache_dir": {"type": "string"},
            }
        ),
        "eigen": _section(
            {
                "n": _DIMENSION,
                "nu": _number_schema(),
                "k": _number_schema(),
                "k_max": _number_schema(0.5),
                "rho": _RANGE,
                "rho_points": _int_schema(10),
                "derivative": {"type": "boolean"},
            }
        ),
        "transform": _section(
            {
                "n": _DIMENSION,
                "nu": _number_schema(),
                "k_max": _number_schema(0.5),
                "r_min": _number_schema(0.0, exclusive=True),
                "r_max": _number_schema(0.0, exclusive=True),
                "rho_min": _number_schema(0.0, exclusive=True),
                "rho_max": _number_schema(0.0, exclusive=True),
                "order": _int_schema(8),
                "support": _RANGE,
                "tail_tolerance": _number_schema(0.0, exclusive=True),
                "residual_tolerance": _number_schema(0.0, exclusive=True),
                "log_r_min": _number_schema(0.0, exclusive=True),
                "log_r_max": _number_schema(0.0, exclusive=True),
                "log_points": _int_schema(8),
                "log_rho_max": _number_schema(0.0, exclusive=True),
                "log_width": _number_schema(0.0, exclusive=True),
            }
        ),
        "evolve": _section({**_DATUM_PROPERTIES, "save_trajectory": {"type": "boolean"}}),
        "strichartz": _section(
            {
                **_DATUM_PROPERTIES,
                "grid_pq": {"type": "string", "minLength": 1},
                "radial_class": {"type": "string", "enum": list(RADIAL_CLASSES)},
                "scales": {"type": "array", "items": _number_schema(0.0, exclusive=True), "minItems": 1},
                "scale_tolerance": _number_schema(0.0, exclusive=True),
            }
        ),
        "smoothing": _section(
            {
                **_DATUM_PROPERTIES,
                "R": _RANGE,
                "plateau_ratio": _number_schema(1.0),
            }
        ),
        "hartree": _section(
            {
                "nu": _number_schema(),
                "omega": {"type": "string", "minLength": 1},
                "p": _number_schema(1.0),
                "T": {"type": "string", "minLength": 1},
                "time_nodes": _int_schema(2),
                "tol": _number_schema(0.0, exclusive=True),
                "max_iters": _int_schema(1),
                "amplitude": _number_schema(0.0),
                "k": _number_schema(),
                "support": _RANGE,
                "r_max": _number_schema(0.0, exclusive=True),
                "rho_max": _number_schema(0.0, exclusive=True),
                "order": _int_schema(8),
                "mass_tolerance": _number_schema(0.0, exclusive=True),
            }
        ),
        "output": _section(
            {
                "dir": {"type": "string", "minLength": 1},
                "emit_plot_data": {"type": "boolean"},
                "baseline_dir": {"type": "string"},
            }
        ),
    },
    "required": ["general", "output"],
}


def _schema_errors(schema: dict[str, Any], payload: Any, prefix: str) -> list[str]:
    validator = Draft7Validator(schema)
    errors: list[str] = []
    for error in sorted(validator.iter_errors(payload), key=lambda e: list(e.absolute_path)):
        path = ".".join(str(part) for part in error.absolute_path) or "(root)"
        errors.append(f"{prefix} schema at {path}: {error.message}")
    return errors


def _check_datum(check: Validator, section: dict[str, Any]) -> None:
    n = check.check(validate_dimension, section.get("n", 3))
    if n is not None and "nu" in section:
        check.check(validate_coupling, n, section["nu"])
    if "support" in section:
        check.check(validate_range_text, section["support"], "support")
    if "order" in section:
        check.check(validate_order, section["order"])


def _check_grid_pq(check: Validator, text: str) -> None:
    if text == "default":
        return
    for pair in text.split(";"):
        parts = pair.split(",")
        if len(parts) != 2:
            check.require(False, f"grid_pq entry {pair!r} must be p,q")
            continue
        check.check(validate_exponent, parts[0].strip(), "p")
        check.check(validate_exponent, parts[1].strip(), "q")


def _cross_field_errors(config: dict[str, Any]) -> list[str]:
    errors: list[str] = []

    eigen = config.get("eigen", {})
    if eigen:
        check = Validator("eigen")
        _check_datum(check, eigen)
        check.check(validate_range_text, eigen.get("rho", "1e-3..100"), "rho")
        errors.extend(check.errors)

    transform = config.get("transform", {})
    if transform:
        check = Validator("transform")
        _check_datum(check, transform)
        check.check(validate_window, transform.get("r_min", 1e-4), transform.get("r_max", 1.0), "r window")
        check.check(validate_window, transform.get("rho_min", 1e-3), transform.get("rho_max", 1.0), "rho window")
        check.check(validate_window, transform.get("log_r_min", 0.01), transform.get("log_r_max", 1.0), "log r window")
        errors.extend(check.errors)

    for name in ("evolve", "strichartz", "smoothing"):
        section = config.get(name, {})
        if not section:
            continue
        check = Validator(name)
        _check_datum(check, section)
        if name == "strichartz":
            _check_grid_pq(check, str(section.get("grid_pq", "default")))
        if name == "smoothing":
            check.check(validate_range_text, section.get("R", "2^-6..2^6"), "R")
        errors.extend(check.errors)

    hartree = config.get("hartree", {})
    if hartree:
        check = Validator("hartree")
        check.check(validate_coupling, 3, hartree.get("nu", 0.0), COUPLING_BOUND, "sqrt(3)/2")
        check.check(validate_kernel_spec, hartree.get("omega", ""))
        check.check(validate_time, hartree.get("T", "auto"))
        check.check(validate_range_text, hartree.get("support", "1..3"), "support")
        errors.extend(check.errors)

    return errors


def validate_config(config: dict[str, Any]) -> list[str]:
    errors = _schema_errors(CAMPAIGN_SCHEMA, config, "config")
    if errors or not isinstance(config, dict):
        return errors
    return _cross_field_errors(config)


def validate_or_raise(config: dict[str, Any]) -> None:
    errors = validate_config(config)
    if errors:
        joined = "\n".join(f"- {error}" for error in errors)
        raise ConfigurationError(f"Config validation failed:\n{joined}", details={"errors": errors})
