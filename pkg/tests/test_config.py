"""Tests for layered settings, parsing helpers and the logger."""

import json
import logging

import numpy as np
import pytest

from hybridsub.core.exceptions import DataFormatError, InvalidParameterError
from hybridsub.utils.config import Settings
from hybridsub.utils.helpers import (
    format_cell,
    format_duration,
    format_float,
    json_clean,
    mean_and_stderr,
    parse_float_list,
    parse_theta,
    stream_id_for,
)
from hybridsub.utils.logger import LoggerSetup, logger


class TestSettings:

    def test_defaults(self):
        settings = Settings()
        assert settings.get("hsl.k") == 20
        assert settings.get("hsl.lambda") == 0.01
        assert settings.get("harness.methods") == ["hsl", "pca", "rpca", "op"]
        assert settings.get("missing.key", "fallback") == "fallback"

    def test_defaults_are_not_shared(self):
        first, second = Settings(), Settings()
        first.get_category("synth")["n"] = 3
        first.set("sweep.k_values", [1])
        assert second.get("sweep.k_values") == [5, 10, 20, 30, 40]
        assert Settings.DEFAULT_SETTINGS["sweep"]["k_values"] == [5, 10, 20, 30, 40]
        assert first.get("synth.n") == 100

    def test_invalid_key(self):
        with pytest.raises(InvalidParameterError):
            Settings().get("nodot")

    @pytest.mark.parametrize("assignment,key,expected", [
        ("hsl.k=7", "hsl.k", 7),
        ("hsl.lambda=0.5", "hsl.lambda", 0.5),
        ("harness.strict=yes", "harness.strict", True),
        ("hsl.eta_rule=column-energy", "hsl.eta_rule", "column-energy"),
        ("hsl.eta=0.25", "hsl.eta", 0.25),
        ("sweep.k_values=[1, 2]", "sweep.k_values", [1, 2]),
    ])
    def test_overrides_follow_current_type(self, assignment, key, expected):
        settings = Settings()
        settings.set_override(assignment)
        assert settings.get(key) == expected

    def test_bad_override(self):
        settings = Settings()
        with pytest.raises(InvalidParameterError):
            settings.set_override("hsl.k")
        with pytest.raises(InvalidParameterError):
            settings.set_override("hsl.k=many")

    def test_load_file_layers_over_defaults(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"hsl": {"k": 4}, "synth": {"sigma2": 0.0}}))
        settings = Settings()
        assert settings.load_file(path) == 2
        assert settings.get("hsl.k") == 4
        assert settings.get("synth.sigma2") == 0.0
        assert settings.get("synth.n") == 100

    def test_load_file_errors_are_positioned(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"hsl": {"k": }}')
        with pytest.raises(DataFormatError) as excinfo:
            Settings().load_file(path)
        assert excinfo.value.line == 1
        assert str(excinfo.value).startswith(f"{path}:1:")
        with pytest.raises(DataFormatError):
            Settings().load_file(tmp_path / "absent.json")
        path.write_text("[1, 2]")
        with pytest.raises(DataFormatError):
            Settings().load_file(path)

    def test_export_import_copy(self):
        settings = Settings()
        settings.set("hsl.k", 9)
        clone = settings.copy()
        clone.set("hsl.k", 10)
        assert settings.get("hsl.k") == 9
        assert Settings(settings.export_settings()).get("hsl.k") == 9
        with pytest.raises(InvalidParameterError):
            settings.import_settings({"hsl": 3})


class TestHelpers:

    def test_parse_theta(self):
        assert parse_theta("0.5,0.3,0.2") == (0.5, 0.3, 0.2)
        assert parse_theta([1, 0, 0]) == (1.0, 0.0, 0.0)
        for bad in ("0.5,0.5", "0.6,0.6,-0.2", "a,b,c", "0.2,0.2,0.2"):
            with pytest.raises(InvalidParameterError):
                parse_theta(bad)

    def test_parse_float_list(self):
        assert parse_float_list("0.1, 1,10,") == [0.1, 1.0, 10.0]
        assert parse_float_list((1, 2)) == [1.0, 2.0]

    def test_stream_ids_are_stable_and_distinct(self):
        assert stream_id_for(3, "hsl") == stream_id_for(3, "hsl")
        ids = {stream_id_for(t, m) for t in range(5) for m in ("hsl", "pca", "rpca", "op")}
        assert len(ids) == 20
        assert all(0 <= i < 2 ** 63 for i in ids)

    def test_mean_and_stderr(self):
        assert mean_and_stderr([2.0]) == (2.0, 0.0)
        mean, se = mean_and_stderr([1.0, 3.0, float("nan")])
        assert mean == 2.0
        assert se == pytest.approx(1.0)
        mean, se = mean_and_stderr([])
        assert mean != mean and se != se

    def test_formatting(self):
        assert format_float(0.1) == "0.1"
        assert format_float(1.0 / 3.0) == "0.3333333333"
        assert format_float(float("nan")) == "nan"
        assert format_float(None) == ""
        assert format_duration(0.25) == "250 ms"
        assert format_duration(2.5) == "2.5 s"
        assert format_duration(125.0) == "2 min 5 s"

    def test_format_cell(self):
        assert format_cell(None) == ""
        assert format_cell(True) == "true" and format_cell(np.bool_(False)) == "false"
        assert format_cell(3) == "3" and format_cell(np.int64(4)) == "4"
        assert format_cell(1.0 / 3.0) == "0.3333333333"
        assert format_cell(np.float64(0.1)) == "0.1"
        assert format_cell(float("nan")) == "nan"
        assert format_cell("op") == "op"

    def test_json_clean(self):
        cleaned = json_clean({"a": float("nan"), "b": [1.0, float("inf")], "c": (2, "x")})
        assert cleaned == {"a": None, "b": [1.0, None], "c": [2, "x"]}


class TestLogger:

    def test_single_instance(self):
        assert LoggerSetup.get_logger() is logger
        assert logger.name == "hybridsub"
        assert not logger.propagate

    def test_console_level_from_environment(self, monkeypatch):
        monkeypatch.setenv("HSL_LOG", "debug")
        assert LoggerSetup.console_level() == logging.DEBUG
        monkeypatch.setenv("HSL_LOG", "chatty")
        assert LoggerSetup.console_level() == logging.WARNING
        monkeypatch.delenv("HSL_LOG")
        assert LoggerSetup.console_level() == logging.WARNING

    def test_set_level(self):
        console = [h for h in logger.handlers if not isinstance(h, logging.FileHandler)]
        previous = console[0].level
        try:
            LoggerSetup.set_level("info")
            assert all(h.level == logging.INFO for h in console)
        finally:
            for handler in console:
                handler.setLevel(previous)
