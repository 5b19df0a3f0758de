"""
Logging setup shared by the CLI and the scenario recorder.

Logs go to stderr so stdout carries only command results. Verbosity comes from
DIFF_LOG, falling back to the settings file's log_level.
"""

import logging
import os
import sys
from typing import Optional

import logfire

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

_logfire_configured = False


def resolve_level(default: str = "INFO") -> int:
    name = os.getenv("DIFF_LOG", default).upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def get_logger(name: str = "netdiff", level: Optional[str] = None) -> logging.Logger:
    """Return a logger writing to stderr, without stacking handlers on repeated calls."""
    logger = logging.getLogger(name)
    logger.setLevel(resolve_level(level or "INFO"))
    ours = [h for h in logger.handlers if getattr(h, "_netdiff", False)]
    if ours:
        # follow sys.stderr if it was swapped since the handler was made
        ours[0].setStream(sys.stderr)
    else:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._netdiff = True
        logger.addHandler(handler)
        logger.propagate = False
    return logger


def configure_logfire() -> None:
    """Enable logfire spans; nothing leaves the process unless LOGFIRE_TOKEN is set."""
    global _logfire_configured
    if _logfire_configured:
        return
    logfire.configure(
        token=os.getenv("LOGFIRE_TOKEN"),
        send_to_logfire="if-token-present",
        console=False,
    )
    _logfire_configured = True
