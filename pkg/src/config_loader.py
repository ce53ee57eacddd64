import configparser
import copy
import os
from pathlib import Path
from typing import Any, Mapping

from src.error_handler import ConfigurationError
from src.utils import parse_scalar

WORKERS_ENV = "DIRAC_LAB_WORKERS"

# k = 0 selects the lowest channel of the dimension (1/2 in 2D, 1 in 3D).
_DATUM = {"k": 0.0, "support": "0.5..1", "r_max": 150.0, "rho_max": 1.25, "order": 8}

DEFAULT_CONFIG: dict[str, Any] = {
    "general": {
        "workers": 0,
        "log_level": "INFO",
        "json_logs": True,
        "uniformity_tolerance": 0.10,
        "baseline_tolerance": 0.05,
        "cache_dir": "",
    },
    "eigen": {
        "n": 3,
        "nu": 0.5,
        "k": 0.0,
        "k_max": 5.0,
        "rho": "1e-3..100",
        "rho_points": 600,
        "derivative": False,
    },
    "transform": {
        "n": 3,
        "nu": 0.0,
        "k_max": 2.0,
        "r_min": 1e-4,
        "r_max": 150.0,
        "rho_min": 1e-3,
        "rho_max": 1.25,
        "order": 8,
        "support": "0.5..1",
        "tail_tolerance": 1e-10,
        "residual_tolerance": 1e-3,
        "log_r_min": 0.01,
        "log_r_max": 20.0,
        "log_points": 300,
        "log_rho_max": 6.0,
        "log_width": 0.3,
    },
    "evolve": {"n": 3, "nu": 0.5, **_DATUM, "t_max": 1.0, "time_nodes": 65, "save_trajectory": False},
    "strichartz": {
        "n": 3,
        "nu": 0.5,
        **_DATUM,
        "grid_pq": "default",
        "radial_class": "all",
        "t_max": 1.0,
        "time_nodes": 65,
        "scales": [0.25, 1.0, 4.0],
        "scale_tolerance": 0.02,
    },
    "smoothing": {
        "n": 3,
        "nu": 0.5,
        **_DATUM,
        "R": "2^-6..2^6",
        "t_max": 1.0,
        "time_nodes": 65,
        "plateau_ratio": 3.0,
    },
    "hartree": {
        "nu": 0.5,
        "omega": "yukawa:b=1,c=1",
        "p": 2.0,
        "T": "auto",
        "time_nodes": 9,
        "tol": 1e-10,
        "max_iters": 30,
        "amplitude": 0.05,
        "k": -1.0,
        "support": "1..3",
        "r_max": 30.0,
        "rho_max": 6.0,
        "order": 8,
        "mass_tolerance": 1e-2,
    },
    "output": {"dir": "output", "emit_plot_data": False, "baseline_dir": ""},
}

_TRUE = {"true", "1", "yes", "y", "on"}
_FALSE = {"false", "0", "no", "n", "off"}


def coerce_value(text: str, default: Any) -> Any:
    """
    Convert an INI string to the type of the default value.

    Unknown keys (default None) stay strings so that schema validation can reject them.
    """
    stripped = text.strip()
    try:
        if isinstance(default, bool):
            lowered = stripped.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(default, int):
            return int(stripped)
        if isinstance(default, float):
            return parse_scalar(stripped)
        if isinstance(default, list):
            return [parse_scalar(item) for item in stripped.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"cannot read {text!r}: {exc}") from exc
    return stripped


def parse_campaign_file(path: str | Path) -> dict[str, Any]:
    """Read a sectioned key = value campaign file into a nested dict."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot read campaign file {path}: {exc}") from exc
    parsed: dict[str, Any] = {}
    for section in parser.sections():
        defaults = DEFAULT_CONFIG.get(section, {})
        parsed[section] = {
            key: coerce_value(value, defaults.get(key)) for key, value in parser.items(section)
        }
    return parsed


def _deep_merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    for key, value in overrides.items():
        if isinstance(value, dict) and key in base and isinstance(base[key], dict):
            _deep_merge(base[key], value)
        else:
            base[key] = value
    return base


def load_config(
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> dict[str, Any]:
    """defaults <- campaign file <- command-line overrides <- environment."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    if config_path is not None:
        _deep_merge(config, parse_campaign_file(config_path))
    if overrides:
        _deep_merge(config, overrides)

    environ = os.environ if environ is None else environ
    workers = environ.get(WORKERS_ENV)
    if workers:
        try:
            config["general"]["workers"] = int(workers)
        except ValueError as exc:
            raise ConfigurationError(f"{WORKERS_ENV} must be an integer, got {workers!r}") from exc
    if not config["general"].get("workers"):
        config["general"]["workers"] = os.cpu_count() or 1
    return config
