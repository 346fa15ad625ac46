"""Logging for mmWave NC: one project logger tree, quiet numeric libraries, campaign progress."""

import logging
import logging.config
import math
import sys
from typing import Any, Optional

from mmwave_nc.types import LogLevel

PROJECT_LOGGER = "mmwave_nc"

DEFAULT_FORMAT = "%(asctime)s %(levelname)-7s %(processName)s %(name)s: %(message)s"

QUIET_LIBRARIES = ("numba", "llvmlite", "galois")
"""galois compiles its ufuncs through numba; these stay at WARNING whatever the project level"""


def logging_dict(level: LogLevel | str = LogLevel.INFO, format_str: Optional[str] = None) -> dict[str, Any]:
    """dictConfig mapping: project records on stdout, errors also on stderr with their origin."""
    level = LogLevel.parse(level)
    loggers: dict[str, Any] = {
        PROJECT_LOGGER: {"handlers": ["stdout", "stderr"], "level": level.value, "propagate": False},
    }
    for name in QUIET_LIBRARIES:
        loggers[name] = {"handlers": ["stdout"], "level": LogLevel.WARNING.value, "propagate": False}

    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "plain": {"format": format_str or DEFAULT_FORMAT},
            "located": {"format": f"{format_str or DEFAULT_FORMAT} [%(module)s:%(lineno)d]"},
        },
        "handlers": {
            "stdout": {"class": "logging.StreamHandler", "formatter": "plain", "stream": sys.stdout},
            "stderr": {
                "class": "logging.StreamHandler",
                "level": LogLevel.ERROR.value,
                "formatter": "located",
                "stream": sys.stderr,
            },
        },
        "loggers": loggers,
        "root": {"handlers": ["stdout"], "level": LogLevel.WARNING.value},
    }


def setup_logging(level: LogLevel | str = LogLevel.INFO, format_str: Optional[str] = None) -> None:
    logging.config.dictConfig(logging_dict(level, format_str))


def project_level() -> int:
    """Effective level of the project logger, handed to worker processes."""
    return logging.getLogger(PROJECT_LOGGER).getEffectiveLevel()


def setup_worker_logging(level: int, format_str: Optional[str] = None) -> None:
    """Process pool initializer; spawned workers start without any handler."""
    setup_logging(logging.getLevelName(level), format_str)


def get_logger(name: str) -> logging.Logger:
    """Logger under the project tree, whether or not name already carries the prefix."""
    name = name.removeprefix(f"{PROJECT_LOGGER}.")
    return logging.getLogger(f"{PROJECT_LOGGER}.{name}")


class UnitProgress:
    """Logs completed work units of a campaign at every tenth of the total."""

    def __init__(self, label: str, total: int, logger: Optional[logging.Logger] = None, steps: int = 10):
        self.label = label
        self.total = total
        self.done = 0
        self.logger = logger or get_logger("progress")
        self._marks = sorted({math.ceil(total * i / steps) for i in range(1, steps + 1)} - {0})

    def advance(self) -> bool:
        """Count one finished unit; True when this one was logged."""
        self.done += 1
        if not self._marks or self.done != self._marks[0]:
            return False
        self._marks.pop(0)
        self.logger.info(f"{self.label}: {self.done}/{self.total} units done")
        return True
