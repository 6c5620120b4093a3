"""Logging helpers.

Library modules call :func:`get_logger` and never touch handlers. The command line
entry point calls :func:`configure_logging` once to route records through rich.
"""

from __future__ import annotations

import logging

from rich.console import Console
from rich.logging import RichHandler

ROOT_LOGGER = "wavebreak"


def get_logger(name: str) -> logging.Logger:
    """Return a logger in the ``wavebreak`` hierarchy.

    Args:
        name: Module name, either dotted (``wavebreak.integrator``) or bare (``integrator``).
    """
    if name == ROOT_LOGGER or name.startswith(ROOT_LOGGER + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")


def configure_logging(level: int | str = logging.INFO, *, console: Console | None = None) -> logging.Logger:
    """Install a single rich handler on the package logger.

    Repeated calls replace the handler instead of stacking a new one.

    Args:
        level: Logging level for the package logger.
        console: Console to write to; defaults to stderr.

    Returns:
        The configured package logger.
    """
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(
        console=console or Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
        log_time_format="[%X]",
    )
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
