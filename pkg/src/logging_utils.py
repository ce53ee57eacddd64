"""Structured event logging shared by the numerics and the campaign driver."""

from __future__ import annotations

import contextlib
import contextvars
import json
import logging
import sys
from typing import Any, Iterator

import numpy as np

from .utils import utc_now_iso

_CAMPAIGN: contextvars.ContextVar[dict[str, Any]] = contextvars.ContextVar("campaign", default={})
_SETTINGS: dict[str, Any] = {"json_enabled": True}


def configure_logging(level: str = "INFO", json_enabled: bool = True) -> None:
    # stdout is reserved for command output
    _SETTINGS["json_enabled"] = json_enabled
    fmt = "%(message)s" if json_enabled else "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
    logging.basicConfig(level=level, format=fmt, stream=sys.stderr, force=True)


@contextlib.contextmanager
def bind_campaign(**fields: Any) -> Iterator[None]:
    """Stamp ``fields`` onto every event logged inside the block."""
    token = _CAMPAIGN.set({**_CAMPAIGN.get(), **fields})
    try:
        yield
    finally:
        _CAMPAIGN.reset(token)


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return value.tolist() if value.size <= 16 else f"<array shape={value.shape}>"
    return str(value)


def log_event(
    logger: logging.Logger,
    action: str,
    status: str,
    level: int = logging.INFO,
    json_enabled: bool | None = None,
    **fields: Any,
) -> None:
    """``json_enabled=None`` follows the format chosen in ``configure_logging``."""
    if not logger.isEnabledFor(level):
        return
    if json_enabled is None:
        json_enabled = _SETTINGS["json_enabled"]
    fields = {**_CAMPAIGN.get(), **fields}
    if not json_enabled:
        logger.log(level, "%s %s %s", action, status, fields)
        return

    payload = {"timestamp": utc_now_iso(), "level": logging.getLevelName(level), "action": action, "status": status}
    payload.update(fields)
    logger.log(level, json.dumps(payload, ensure_ascii=True, default=_plain))
