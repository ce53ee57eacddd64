"""Tests for parsing and formatting helpers and structured logging."""

from __future__ import annotations

import json
import logging
import math

import numpy as np
import pytest

from src import logging_utils
from src.logging_utils import bind_campaign, configure_logging, log_event
from src.utils import config_hash, dyadic_members, format_float, parse_range, parse_scalar


class TestParsing:
    def test_parse_scalar(self):
        assert parse_scalar("1e-3") == 1e-3
        assert parse_scalar("2^-6") == 1 / 64
        assert parse_scalar("inf") == math.inf

    def test_parse_range(self):
        assert parse_range("1e-3..100") == (1e-3, 100.0, False)
        assert parse_range("2^-6 .. 2^6") == (1 / 64, 64.0, True)

    @pytest.mark.parametrize("text", ["1..", "5..1", "abc"])
    def test_parse_range_rejects(self, text):
        with pytest.raises(ValueError):
            parse_range(text)

    def test_dyadic_members(self):
        assert dyadic_members(1 / 64, 64.0) == [2.0**j for j in range(-6, 7)]
        assert dyadic_members(0.3, 3.0) == [0.5, 1.0, 2.0]


class TestFormatting:
    def test_format_float(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(2.0) == "2"
        assert format_float(-math.inf) == "-inf"
        assert format_float(math.nan) == "nan"

    def test_config_hash_ignores_key_order(self):
        assert config_hash({"a": 1, "b": {"c": 2}}) == config_hash({"b": {"c": 2}, "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})


class TestLogEvent:
    def test_json_payload(self, caplog):
        logger = logging.getLogger("test.log_event")
        with caplog.at_level(logging.INFO, logger="test.log_event"):
            log_event(logger, "picard", "iterate", iteration=np.int64(2), factor=np.float64(0.25))

        payload = json.loads(caplog.records[-1].getMessage())
        assert payload["action"] == "picard"
        assert payload["status"] == "iterate"
        assert payload["iteration"] == 2
        assert payload["factor"] == 0.25
        assert payload["level"] == "INFO"

    def test_disabled_level_is_skipped(self, caplog):
        logger = logging.getLogger("test.log_event.quiet")
        with caplog.at_level(logging.WARNING, logger="test.log_event.quiet"):
            log_event(logger, "kernel_cache", "hit", level=logging.DEBUG)
        assert not caplog.records

    def test_campaign_fields_are_stamped(self, caplog):
        logger = logging.getLogger("test.log_event.bound")
        with caplog.at_level(logging.INFO, logger="test.log_event.bound"):
            with bind_campaign(campaign="eigen_eval", config_hash="abc"):
                log_event(logger, "eigen", "sample", value=1 + 2j)
            log_event(logger, "eigen", "done")

        inside, outside = (json.loads(record.getMessage()) for record in caplog.records[-2:])
        assert inside["campaign"] == "eigen_eval"
        assert inside["value"] == [1.0, 2.0]
        assert "campaign" not in outside

    def test_large_arrays_are_summarized(self, caplog):
        logger = logging.getLogger("test.log_event.array")
        with caplog.at_level(logging.INFO, logger="test.log_event.array"):
            log_event(logger, "grid", "built", nodes=np.zeros(64))
        assert json.loads(caplog.records[-1].getMessage())["nodes"] == "<array shape=(64,)>"

    def test_plain_text_follows_configuration(self, caplog, monkeypatch):
        monkeypatch.setitem(logging_utils._SETTINGS, "json_enabled", False)
        logger = logging.getLogger("test.log_event.plain")
        with caplog.at_level(logging.INFO, logger="test.log_event.plain"):
            log_event(logger, "evolve", "start", nodes=3)
            log_event(logger, "evolve", "done", json_enabled=True)

        plain, forced = (record.getMessage() for record in caplog.records[-2:])
        assert plain == "evolve start {'nodes': 3}"
        assert json.loads(forced)["status"] == "done"

    def test_configure_logging_sets_format(self):
        try:
            configure_logging("INFO", json_enabled=False)
            assert logging_utils._SETTINGS["json_enabled"] is False
        finally:
            configure_logging("INFO", json_enabled=True)
        assert logging_utils._SETTINGS["json_enabled"] is True
