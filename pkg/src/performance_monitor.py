"""
Performance Monitoring Module
Wall-time records for kernel builds, transforms, evolutions and Picard iterations.
"""

from __future__ import annotations

import functools
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, TypeVar

from src.logging_utils import log_event
from src.utils import utc_now_iso

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

DEFAULT_SLOW_THRESHOLD_S = 60.0


@dataclass
class PerformanceMetric:
    """One timed operation."""

    name: str
    seconds: float
    timestamp: str
    success: bool
    metadata: dict[str, Any] = field(default_factory=dict)
    error: str | None = None


def _empty_stats() -> dict[str, Any]:
    return {
        "count": 0,
        "total_seconds": 0.0,
        "min_seconds": float("inf"),
        "max_seconds": 0.0,
        "error_count": 0,
    }


class PerformanceMonitor:
    """Accumulates timings per operation name."""

    def __init__(self, slow_threshold_s: float = DEFAULT_SLOW_THRESHOLD_S):
        self.metrics: list[PerformanceMetric] = []
        self.operation_stats: dict[str, dict[str, Any]] = defaultdict(_empty_stats)
        self.slow_threshold_s = slow_threshold_s

    def record_metric(
        self,
        name: str,
        seconds: float,
        success: bool = True,
        metadata: dict[str, Any] | None = None,
        error: str | None = None,
    ) -> None:
        self.metrics.append(PerformanceMetric(name, seconds, utc_now_iso(), success, metadata or {}, error))

        stats = self.operation_stats[name]
        stats["count"] += 1
        stats["total_seconds"] += seconds
        stats["min_seconds"] = min(stats["min_seconds"], seconds)
        stats["max_seconds"] = max(stats["max_seconds"], seconds)
        if not success:
            stats["error_count"] += 1

        if seconds > self.slow_threshold_s:
            log_event(
                logger,
                name,
                "slow",
                level=logging.WARNING,
                seconds=round(seconds, 3),
                threshold_s=self.slow_threshold_s,
                **(metadata or {}),
            )

    def get_stats(self, operation_name: str | None = None) -> dict[str, Any]:
        """Stats for one operation, or a dict of stats keyed by operation."""
        if operation_name is not None:
            if operation_name not in self.operation_stats:
                return {}
            return self._with_mean(self.operation_stats[operation_name])
        return {name: self._with_mean(stats) for name, stats in self.operation_stats.items()}

    @staticmethod
    def _with_mean(stats: dict[str, Any]) -> dict[str, Any]:
        out = dict(stats)
        if out["count"]:
            out["mean_seconds"] = out["total_seconds"] / out["count"]
        return out

    def get_slow_operations(self, threshold_s: float | None = None) -> list[PerformanceMetric]:
        threshold = self.slow_threshold_s if threshold_s is None else threshold_s
        return [m for m in self.metrics if m.seconds > threshold]

    def clear_metrics(self) -> None:
        self.metrics.clear()
        self.operation_stats.clear()

    def get_summary(self) -> dict[str, Any]:
        """Per-operation totals sorted by time spent, for the run report."""
        ordered = sorted(self.operation_stats.items(), key=lambda item: item[1]["total_seconds"], reverse=True)
        return {
            "operations": sum(s["count"] for s in self.operation_stats.values()),
            "errors": sum(s["error_count"] for s in self.operation_stats.values()),
            "slow": len(self.get_slow_operations()),
            "by_operation": {
                name: {
                    "count": stats["count"],
                    "total_seconds": round(stats["total_seconds"], 6),
                    "max_seconds": round(stats["max_seconds"], 6),
                }
                for name, stats in ordered
            },
        }

    def format_summary(self) -> str:
        if not self.operation_stats:
            return "No performance metrics recorded"
        lines = [f"{'Operation':<28} {'Count':>6} {'Mean(s)':>10} {'Total(s)':>10}", "-" * 57]
        for name, stats in self.get_summary()["by_operation"].items():
            mean = stats["total_seconds"] / stats["count"]
            lines.append(f"{name:<28} {stats['count']:>6} {mean:>10.3f} {stats['total_seconds']:>10.3f}")
        return "\n".join(lines)


_monitor: PerformanceMonitor | None = None


def get_monitor() -> PerformanceMonitor:
    global _monitor
    if _monitor is None:
        _monitor = PerformanceMonitor()
    return _monitor


def track_performance(operation_name: str | None = None) -> Callable[[F], F]:
    """
    Time every call of the decorated function.

    Example:
        @track_performance("picard_iteration")
        def step(self, H, times):
            ...
    """

    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            with time_operation(operation_name or func.__name__):
                return func(*args, **kwargs)

        return wrapper  # type: ignore

    return decorator


class PerformanceTimer:
    """Context manager recording the wall time of a block."""

    def __init__(self, operation_name: str, metadata: dict[str, Any] | None = None):
        self.operation_name = operation_name
        self.metadata = metadata or {}
        self.start_time = 0.0
        self.seconds = 0.0

    def __enter__(self) -> PerformanceTimer:
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        self.seconds = time.perf_counter() - self.start_time
        error = f"{exc_type.__name__}: {exc_val}" if exc_type else None
        get_monitor().record_metric(self.operation_name, self.seconds, exc_type is None, self.metadata, error)


def time_operation(operation_name: str, metadata: dict[str, Any] | None = None) -> PerformanceTimer:
    """
    Example:
        with time_operation("kernel_build", {"k": 1.0}):
            plan.kernels
    """
    return PerformanceTimer(operation_name, metadata)
