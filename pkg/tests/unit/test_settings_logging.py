import json
import logging

import pytest
from pydantic import ValidationError

from kolmogorov_lab.config.logging import ContextFilter, JsonLogFormatter, check_scope, set_run_context
from kolmogorov_lab.config.settings import get_settings


@pytest.fixture(autouse=True)
def _fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def test_environment_aliases(monkeypatch: pytest.MonkeyPatch, tmp_path) -> None:
    monkeypatch.setenv("KOLMO_OUT_DIR", str(tmp_path))
    monkeypatch.setenv("KOLMO_THREADS", "4")
    monkeypatch.setenv("KOLMO_SEED", "123")
    monkeypatch.setenv("KOLMO_LOG_LEVEL", "debug")
    settings = get_settings()
    assert settings.out_dir == tmp_path
    assert settings.threads == 4
    assert settings.seed == 123
    assert settings.log_level == "DEBUG"


def test_invalid_values_are_rejected(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("KOLMO_LOG_LEVEL", "LOUD")
    with pytest.raises(ValidationError):
        get_settings()
    get_settings.cache_clear()
    monkeypatch.setenv("KOLMO_LOG_LEVEL", "INFO")
    monkeypatch.setenv("KOLMO_THREADS", "512")
    with pytest.raises(ValueError, match="256"):
        get_settings()


def test_json_formatter_carries_context() -> None:
    set_run_context("run-42")
    record = logging.LogRecord("kolmogorov_lab.test", logging.INFO, __file__, 1, "slice_checked", None, None)
    record.gap = 0.25
    with check_scope("tail_decay_thm53"):
        ContextFilter().filter(record)
    payload = json.loads(JsonLogFormatter().format(record))
    assert payload["message"] == "slice_checked"
    assert payload["run_id"] == "run-42"
    assert payload["check"] == "tail_decay_thm53"
    assert payload["gap"] == 0.25
    assert payload["level"] == "INFO"


def test_check_scope_resets_on_exit() -> None:
    with check_scope("kde_vs_fd"):
        pass
    record = logging.LogRecord("kolmogorov_lab.test", logging.INFO, __file__, 1, "after", None, None)
    ContextFilter().filter(record)
    assert json.loads(JsonLogFormatter().format(record))["check"] is None
