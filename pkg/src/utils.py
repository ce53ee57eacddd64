import hashlib
import json
import math
import re
from datetime import datetime, timezone
from typing import Any

_RANGE_RE = re.compile(r"^\s*(?P<lo>[^.][^ ]*?)\s*\.\.\s*(?P<hi>\S+)\s*$")
_POWER_RE = re.compile(r"^\s*(?P<base>\d+(?:\.\d*)?)\^(?P<exp>[-+]?\d+)\s*$")


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def config_hash(config: dict[str, Any]) -> str:
    payload = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def format_float(value: float) -> str:
    """Fixed 17-significant-digit rendering used by every CSV writer."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def parse_scalar(text: str) -> float:
    """Parse `1e-3`, `inf` or a power literal such as `2^-6`."""
    match = _POWER_RE.match(text)
    if match:
        return float(match.group("base")) ** int(match.group("exp"))
    return float(text)


def parse_range(text: str) -> tuple[float, float, bool]:
    """
    Parse a range literal.

    `1e-3..100` gives (0.001, 100.0, False); `2^-6..2^6` gives (1/64, 64.0, True), the flag
    marking a dyadic range whose members are the integer powers between the ends.
    """
    match = _RANGE_RE.match(text)
    if not match:
        raise ValueError(f"not a range literal: {text!r}")
    lo_text, hi_text = match.group("lo"), match.group("hi")
    dyadic = bool(_POWER_RE.match(lo_text)) and bool(_POWER_RE.match(hi_text))
    lo, hi = parse_scalar(lo_text), parse_scalar(hi_text)
    if not lo < hi:
        raise ValueError(f"empty range: {text!r}")
    return lo, hi, dyadic


def dyadic_members(lo: float, hi: float) -> list[float]:
    first = math.ceil(math.log2(lo) - 1e-12)
    last = math.floor(math.log2(hi) + 1e-12)
    return [2.0**j for j in range(first, last + 1)]
