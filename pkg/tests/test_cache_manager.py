"""Tests for the kernel cache."""

from __future__ import annotations

import numpy as np

from src.cache_manager import CacheManager

PARAMS = {"n": 3, "nu": 0.5, "k": 1.0, "r_grid": "abc"}


class TestCacheManager:
    def test_miss_then_hit(self, tmp_path):
        cache = CacheManager(tmp_path)
        assert cache.get("kernels", PARAMS) is None

        cache.set("kernels", PARAMS, {"a": np.arange(4.0)})
        arrays = cache.get("kernels", PARAMS)

        assert arrays is not None
        np.testing.assert_array_equal(arrays["a"], np.arange(4.0))
        assert cache.get_stats()["hits"] == 1
        assert cache.get_stats()["misses"] == 1

    def test_key_depends_on_params(self, tmp_path):
        cache = CacheManager(tmp_path)
        cache.set("kernels", PARAMS, {"a": np.zeros(2)})
        assert cache.get("kernels", {**PARAMS, "k": -1.0}) is None

    def test_expired_entries(self, tmp_path):
        cache = CacheManager(tmp_path, ttl_seconds=-1)
        cache.set("kernels", PARAMS, {"a": np.zeros(2)})
        assert cache.clear_expired() == 1

        cache.set("kernels", PARAMS, {"a": np.zeros(2)})
        assert cache.get("kernels", PARAMS) is None
        assert cache.get_stats()["total_files"] == 0
