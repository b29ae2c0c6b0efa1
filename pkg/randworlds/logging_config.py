"""Logging setup for randworlds.

Every module logs through the shared loguru logger. The package logger is
disabled when this module loads, so library callers see nothing until
``configure_logging`` attaches a sink; the CLI attaches one on stderr and
keeps stdout for reports.
"""

import sys
from typing import TYPE_CHECKING, TextIO

from loguru import logger

if TYPE_CHECKING:
    from loguru import Logger

PACKAGE = "randworlds"

VERBOSE_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>"

# Exact counting with --workers logs from pool processes; the process name tells them apart.
DEBUG_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | <magenta>{process.name}</magenta> | "
    "<cyan>{name}:{function}:{line}</cyan> - <level>{message}</level>"
)

logger.disable(PACKAGE)


def configure_logging(verbose: bool = False, debug: bool = False, sink: TextIO | None = None) -> int | None:
    """
    Attach a single log sink according to the CLI verbosity flags.

    With neither flag, all handlers are removed and the package stays silent.
    ``verbose`` shows INFO (files read, methods chosen, schedule progress);
    ``debug`` adds engine internals (profile groups, DP states, shard
    acceptance) with process and source location.

    Args:
        verbose: Enable INFO level logging
        debug: Enable DEBUG level logging
        sink: Stream to write to (default: stderr)

    Returns:
        The loguru handler id, or None when logging stays off
    """
    logger.remove()
    if not (verbose or debug):
        logger.disable(PACKAGE)
        return None

    logger.enable(PACKAGE)
    return logger.add(
        sink if sink is not None else sys.stderr,
        level="DEBUG" if debug else "INFO",
        format=DEBUG_FORMAT if debug else VERBOSE_FORMAT,
        colorize=None if sink is None else False,
        backtrace=debug,
        diagnose=debug,
    )


def get_logger() -> "Logger":
    return logger
