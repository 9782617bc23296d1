import logging
import sys
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

import numpy as np
import structlog

from .. import __version__


def _numpy_scalars(logger: Any, method: str, event: Dict[str, Any]) -> Dict[str, Any]:
    """np.int64 and friends are not JSON serialisable; log them as Python numbers"""
    for key, value in event.items():
        if isinstance(value, np.generic):
            event[key] = value.item()
    return event


def _code_version(logger: Any, method: str, event: Dict[str, Any]) -> Dict[str, Any]:
    event.setdefault("code_version", __version__)
    return event


def configure_logging(log_level: str = "INFO") -> None:
    """Configure structured logging.

    Records are rendered as JSON on stderr; stdout is reserved for command output. Context
    bound with ``run_context`` is merged into every record, whichever module logs it.
    """
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, log_level.upper())
    )

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            _code_version,
            _numpy_scalars,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer()
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name: Optional[str] = None) -> structlog.stdlib.BoundLogger:
    """Get a structured logger instance"""
    return structlog.get_logger(name or __name__)


@contextmanager
def run_context(**context: Any) -> Iterator[None]:
    """Attach run identity (run id, experiment kind, config hash) to every record logged inside"""
    with structlog.contextvars.bound_contextvars(**context):
        yield
