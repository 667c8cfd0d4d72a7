"""Logging configuration with optional structured JSON output."""

import logging
import sys

import structlog

__all__ = ["get_logger", "setup_root_logger"]

_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_root_logger(
    *,
    name: str = "root",
    level: str = "INFO",
    json_format: bool = False,
) -> None:
    """Configure application logging.

    Args:
        name: Root logger name for the application.
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL).
        json_format: If True, output logs as JSON lines.
    """
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))

    renderer: structlog.types.Processor
    if json_format:
        renderer = structlog.processors.JSONRenderer()
        timestamper = structlog.processors.TimeStamper(fmt="iso")
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=False)
        timestamper = structlog.processors.TimeStamper(fmt=_DATE_FORMAT)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            timestamper,
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    root_logger = logging.getLogger(name)
    root_logger.setLevel(getattr(logging, level.upper()))

    logging.basicConfig(
        level=getattr(logging, level.upper()),
        handlers=[handler],
        force=True,
    )


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Get a logger for a module.

    Args:
        name: Module name (typically __name__).

    Returns:
        Structured logger bound to the module name.
    """
    logger: structlog.stdlib.BoundLogger = structlog.stdlib.get_logger(name)
    return logger
