"""Report generation for campaigns: CSV tables, the JSON run report and plot-data series."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from src.error_handler import ConfigurationError
from src.logging_utils import log_event
from src.utils import config_hash, format_float

logger = logging.getLogger(__name__)

BASELINE_MODES = ("relative", "upper")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings inf, -inf and nan."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return f if math.isfinite(f) else format_float(f)
    if value is None or isinstance(value, str):
        return value
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    return str(value)


@dataclass
class ReportTable:
    name: str
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)


@dataclass
class PlotSeries:
    name: str
    x: np.ndarray
    y: np.ndarray


class ReportGenerator:
    """Collects one command's checks, tables and series and writes them in a fixed order."""

    def __init__(self, command: str, config: dict[str, Any], output_dir: str | Path):
        self.command = command
        self.config = config
        self.output_dir = Path(output_dir)
        self.tables: list[ReportTable] = []
        self.series: list[PlotSeries] = []
        self.checks: list[dict[str, Any]] = []
        self.results: dict[str, Any] = {}
        self.diagnostics: dict[str, Any] = {"errors": [], "warnings": []}

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def passed(self) -> bool:
        return all(check["pass"] for check in self.checks)

    def add_table(self, name: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> ReportTable:
        table = ReportTable(name, list(columns), [list(row) for row in rows])
        self.tables.append(table)
        return table

    def add_series(self, name: str, x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> None:
        self.series.append(PlotSeries(name, np.asarray(x, dtype=float), np.asarray(y, dtype=float)))

    def add_check(
        self,
        case: str,
        value: float,
        tolerance: float,
        passed: bool,
        diagnostics: dict[str, Any] | None = None,
    ) -> dict[str, Any]:
        check = {
            "case": case,
            "value": value,
            "tolerance": tolerance,
            "pass": bool(passed),
            "diagnostics": diagnostics or {},
        }
        self.checks.append(check)
        return check

    def gate_baseline(
        self, path: str | Path, values: dict[str, float], tolerance: float, mode: str = "relative"
    ) -> bool:
        """
        Gate values against the baseline stored at path; an absent file is written from values first.

        mode "relative" passes |value / stored - 1| <= tolerance, mode "upper" passes
        value <= (1 + tolerance) * stored. Keys missing from the stored file fail.

        Returns:
            True when this call wrote the baseline.

        Raises:
            ConfigurationError: the stored file is not a baseline document, or mode is unknown
        """
        if mode not in BASELINE_MODES:
            raise ConfigurationError(f"baseline mode must be one of {BASELINE_MODES}, got {mode!r}")
        path = Path(path)
        created = not path.exists()
        if created:
            path.parent.mkdir(parents=True, exist_ok=True)
            document = {"command": self.command, "values": values}
            path.write_text(json.dumps(jsonable(document), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        try:
            stored = json.loads(path.read_text(encoding="utf-8"))["values"]
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise ConfigurationError(f"unreadable baseline {path}: {e}", details={"path": str(path)}) from e
        if not isinstance(stored, dict):
            raise ConfigurationError(f"baseline {path} has no values table", details={"path": str(path)})

        for key in sorted(values):
            value = float(values[key])
            if key not in stored:
                self.add_check(f"baseline {key}", value, tolerance, False, {"stored": None})
                continue
            reference = float(stored[key])
            if value == reference:
                drift = 0.0
            elif reference == 0.0 or not math.isfinite(reference):
                drift = math.inf
            else:
                drift = value / reference - 1.0
            passed = abs(drift) <= tolerance if mode == "relative" else drift <= tolerance
            self.add_check(f"baseline {key}", drift, tolerance, passed, {"stored": reference, "value": value})
        log_event(
            logger,
            "baseline",
            "written" if created else "compared",
            command=self.command,
            path=str(path),
            keys=len(values),
        )
        return created

    def to_csv(self, table: ReportTable) -> Path:
        path = self.output_dir / f"{self.command}_{table.name}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([_cell(value) for value in row])
        logger.info("Wrote %d rows to CSV: %s", len(table.rows), path)
        return path

    def to_plot_data(self, series: PlotSeries) -> Path:
        path = self.output_dir / "plot_data" / f"{self.command}_{series.name}.dat"
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"{format_float(x)} {format_float(y)}" for x, y in zip(series.x, series.y)]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def to_json(self) -> Path:
        path = self.output_dir / f"{self.command}_report.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "command": self.command,
            "config_hash": self.config_hash,
            "pass": self.passed,
            "checks": self.checks,
            "results": self.results,
            "diagnostics": self.diagnostics,
            "tables": [f"{self.command}_{t.name}.csv" for t in self.tables],
            "config": self.config,
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(jsonable(payload), f, indent=2)
            f.write("\n")
        logger.info("Wrote JSON report to: %s", path)
        return path

    def write(self, emit_plot_data: bool = False) -> list[Path]:
        """Tables first, then plot data, then the JSON report."""
        paths = [self.to_csv(table) for table in self.tables]
        if emit_plot_data:
            paths.extend(self.to_plot_data(series) for series in self.series)
        paths.append(self.to_json())
        return paths
