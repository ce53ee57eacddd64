"""On-disk cache for transform kernel matrices."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from pathlib import Path
from typing import Any

import numpy as np

from src.logging_utils import log_event

logger = logging.getLogger(__name__)


class CacheManager:
    """Stores named float arrays per parameter set as .npz files with a TTL."""

    def __init__(self, cache_dir: str | Path = ".cache/kernels", ttl_seconds: int = 7 * 24 * 3600):
        self.cache_dir = Path(cache_dir)
        self.ttl_seconds = ttl_seconds
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    def _get_cache_key(self, kind: str, params: dict[str, Any]) -> str:
        """Generate a cache key from the kind and params."""
        key_data = f"{kind}:{json.dumps(params, sort_keys=True, default=str)}"
        return hashlib.md5(key_data.encode()).hexdigest()

    def _get_cache_path(self, cache_key: str) -> Path:
        return self.cache_dir / f"{cache_key}.npz"

    def _expired(self, cached_at: float) -> bool:
        return time.time() - cached_at > self.ttl_seconds

    def get(self, kind: str, params: dict[str, Any]) -> dict[str, np.ndarray] | None:
        """Get cached arrays if they exist and are not expired."""
        cache_path = self._get_cache_path(self._get_cache_key(kind, params))
        if not cache_path.exists():
            self.misses += 1
            return None

        try:
            with np.load(cache_path, allow_pickle=False) as archive:
                if self._expired(float(archive["_cached_at"])):
                    cache_path.unlink()
                    self.misses += 1
                    return None
                arrays = {name: archive[name] for name in archive.files if name != "_cached_at"}
        except (OSError, ValueError, KeyError):
            self.misses += 1
            return None

        self.hits += 1
        log_event(logger, "kernel_cache", "hit", level=logging.DEBUG, kind=kind)
        return arrays

    def set(self, kind: str, params: dict[str, Any], arrays: dict[str, np.ndarray]) -> None:
        """Cache arrays with a timestamp."""
        cache_path = self._get_cache_path(self._get_cache_key(kind, params))
        np.savez(cache_path, _cached_at=np.array(time.time()), **arrays)

    def clear_expired(self) -> int:
        """Clear expired cache entries. Returns count of removed files."""
        removed = 0
        for cache_file in self.cache_dir.glob("*.npz"):
            try:
                with np.load(cache_file, allow_pickle=False) as archive:
                    expired = self._expired(float(archive["_cached_at"]))
            except (OSError, ValueError, KeyError):
                expired = True
            if expired:
                cache_file.unlink()
                removed += 1
        return removed

    def get_stats(self) -> dict[str, Any]:
        files = list(self.cache_dir.glob("*.npz"))
        return {
            "total_files": len(files),
            "total_size_bytes": sum(f.stat().st_size for f in files),
            "hits": self.hits,
            "misses": self.misses,
            "cache_dir": str(self.cache_dir),
            "ttl_seconds": self.ttl_seconds,
        }
