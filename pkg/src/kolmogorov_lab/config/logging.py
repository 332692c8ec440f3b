"""Structured JSON logging.

Every record carries the ``run_id`` of the CLI invocation and, while a
verification check runs, its ``check`` id. Numeric context goes in ``extra``.
"""

from __future__ import annotations

import contextvars
import json
import logging
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import datetime, timezone

UTC = timezone.utc
from typing import Any

_RUN_ID: contextvars.ContextVar[str | None] = contextvars.ContextVar("run_id", default=None)
_CHECK: contextvars.ContextVar[str | None] = contextvars.ContextVar("check", default=None)

# attributes every LogRecord has; anything else arrived through ``extra``
_RECORD_ATTRS = frozenset(logging.LogRecord("", 0, "", 0, "", None, None).__dict__) | {"message", "asctime"}
_CONTEXT_KEYS = ("run_id", "check", "step")


class JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, tz=UTC).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        payload["run_id"] = getattr(record, "run_id", None) or _RUN_ID.get()
        payload["check"] = getattr(record, "check", None) or _CHECK.get()
        payload["step"] = getattr(record, "step", None)
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        if record.stack_info:
            payload["stack"] = self.formatStack(record.stack_info)
        payload.update(
            (key, value)
            for key, value in record.__dict__.items()
            if key not in _RECORD_ATTRS and key not in _CONTEXT_KEYS
        )
        return json.dumps(payload, default=str)


class ContextFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        for key, var in (("run_id", _RUN_ID), ("check", _CHECK)):
            if getattr(record, key, None) is None:
                setattr(record, key, var.get())
        return True


def configure_logging(level: str = "INFO") -> None:
    """Install one JSON handler on stderr, replacing any existing handlers."""
    root = logging.getLogger()
    root.setLevel(level)
    root.handlers.clear()

    handler = logging.StreamHandler()
    handler.setFormatter(JsonLogFormatter())
    handler.addFilter(ContextFilter())
    root.addHandler(handler)


def set_run_context(run_id: str) -> None:
    _RUN_ID.set(run_id)


@contextmanager
def check_scope(check_id: str) -> Iterator[None]:
    """Tag every record logged inside the block with ``check_id``."""
    token = _CHECK.set(check_id)
    try:
        yield
    finally:
        _CHECK.reset(token)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
