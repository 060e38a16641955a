import logging
import sys

import structlog

from ltbridge.common.config import LOG_LEVEL, LOG_JSON


def configure_logging(level: str | None = None, json_logs: bool | None = None) -> None:
    """Configure structlog once for the CLI; library modules only call get_logger()."""
    level_value = getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO)
    renderer = (
        structlog.processors.JSONRenderer()
        if (LOG_JSON if json_logs is None else json_logs)
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level_value),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
