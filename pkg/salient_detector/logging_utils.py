"""
Logging setup: module loggers go through a single rich handler.
"""

import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from .config import Config

LOG_FORMAT = "%(message)s"


def setup_logging(level: Optional[str] = None, console: Optional[Console] = None) -> logging.Logger:
    """
    Route the package's loggers through RichHandler.

    Args:
        level: Level name; defaults to SALIENT_LOG_LEVEL
        console: Console to log to (stderr by default)

    Returns:
        The package logger
    """
    level = (level or Config.LOG_LEVEL).upper()
    handler = RichHandler(
        console=console or Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
        markup=False,
    )
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="[%X]"))

    logger = logging.getLogger("salient_detector")
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
