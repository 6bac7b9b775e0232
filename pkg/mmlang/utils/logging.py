"""
Logging utilities for the mmlang toolchain.
"""

import logging
import sys

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance with consistent formatting.

    Args:
        name: Name of the logger (typically __name__ from the calling module)

    Returns:
        Logger that writes to stderr, never to the program's stdout
    """
    logger = logging.getLogger(name)

    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(handler)
        logger.propagate = False

    return logger


def configure_logging(level: str = "WARNING") -> None:
    """
    Configure the level of every mmlang logger.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)

    Raises:
        ValueError: If the level name is unknown
    """
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level: {level}")

    logging.getLogger("mmlang").setLevel(numeric)
    for name, logger in logging.Logger.manager.loggerDict.items():
        if name.startswith("mmlang") and isinstance(logger, logging.Logger):
            logger.setLevel(numeric)
