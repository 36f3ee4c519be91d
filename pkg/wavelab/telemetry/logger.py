import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import orjson

from . import core

SPANS = [
    "wavelab.evolve.run",
    "wavelab.channels.experiment",
    "wavelab.channels.ensemble",
    "wavelab.stationary.manifold",
    "wavelab.selfsimilar.evolve",
    "wavelab.diagnostics.kernel",
    "wavelab.oracles.compare",
]

EVENTS = [
    *(f"{prefix}.{suffix}" for prefix in SPANS for suffix in ("stop", "exception")),
    "wavelab.evolve.blowup",
]

HANDLER_ID = "wavelab-logger"

_DROPPED = frozenset({"system_time", "traceback"})
_TIMINGS = ("duration", "cpu_time")


@dataclass(frozen=True, slots=True)
class _JsonLines:
    level: int = logging.INFO
    logger: logging.Logger = field(default_factory=lambda: logging.getLogger("wavelab"))

    def __call__(self, name: str, meta: dict[str, Any]) -> None:
        record = {key: _plain(val) for key, val in meta.items() if key not in _DROPPED}

        for key in _TIMINGS:
            if key in record:
                record[key] = round(record[key] / 1_000_000, 2)

        record["event"] = name

        message = orjson.dumps(record, option=orjson.OPT_SERIALIZE_NUMPY, default=str)

        self.logger.log(self._level_for(name), message.decode())

    def _level_for(self, name: str) -> int:
        match name.rsplit(".", 1)[-1]:
            case "exception":
                return logging.ERROR
            case "stop" | "blowup":
                return self.level
            case _:
                return logging.DEBUG


def _plain(value: Any) -> Any:
    # orjson rejects non-finite floats, so NaN and inf travel as strings
    if isinstance(value, (float, np.floating)) and not np.isfinite(value):
        return str(float(value))

    return value


def attach(
    *,
    level: int = logging.INFO,
    logger: logging.Logger | None = None,
    events: list[str] | None = None,
) -> None:
    """Log experiment events as JSON lines.

    Durations and CPU times are converted to milliseconds; start times and tracebacks
    are left out.

    Args:
        level: Logging level for stop and blow-up events (default: INFO)
        logger: Custom logger instance (default: ``logging.getLogger("wavelab")``)
        events: Specific events to log (default: every span stop and exception)

    Example:
        >>> import logging
        >>> logging.basicConfig(level=logging.INFO)
        >>> wavelab.telemetry.logger.attach()
    """
    handler = _JsonLines(level, logger or logging.getLogger("wavelab"))

    core.detach(HANDLER_ID)
    core.attach(HANDLER_ID, events or EVENTS, handler)


def detach() -> None:
    core.detach(HANDLER_ID)
