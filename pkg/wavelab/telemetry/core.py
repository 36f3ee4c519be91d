"""
Event emission and handler attachment for instrumenting long numerical runs.

Experiments announce themselves through named events (``wavelab.evolve.run.start``,
``wavelab.evolve.run.stop`` and so on) and any number of handlers may listen. Nothing
is attached by default, so an unobserved event costs one pass over the registry.

Span events carry both wall clock ``duration`` and ``cpu_time`` in nanoseconds. For
threaded ensembles the second exceeds the first.
"""

import logging
import time
import traceback

from contextlib import contextmanager
from dataclasses import dataclass, field
from threading import RLock
from typing import Any, Callable, Iterator

Handler = Callable[[str, dict[str, Any]], None]
Metadata = dict[str, Any]

logger = logging.getLogger(__name__)

_registry: dict[str, tuple[frozenset[str], Handler]] = {}
_lock = RLock()


@dataclass(slots=True)
class Collector:
    """Accumulates results while a span runs.

    Yielded by :func:`span` so the instrumented code can report what it found
    (termination reason, step counts, fitted constants) in the closing event.
    """

    metadata: Metadata = field(default_factory=dict)

    def add(self, metadata: Metadata) -> None:
        self.metadata.update(metadata)


def attach(id: str, events: list[str], handler: Handler) -> None:
    """Attach a handler function to one or more events.

    Attaching again under the same ``id`` replaces the handler and extends its events.

    Args:
        id: Unique identifier for this handler, used for detaching
        events: Event names to handle, e.g. ``["wavelab.evolve.run.stop"]``
        handler: Function called with ``(name, metadata)`` for each event

    Example:
        >>> def report(name, metadata):
        ...     print(name, metadata.get("reason"))
        >>> telemetry.attach("report", ["wavelab.evolve.run.stop"], report)
    """
    with _lock:
        known, _ = _registry.get(id, (frozenset(), handler))
        _registry[id] = (known | frozenset(events), handler)


def detach(id: str) -> None:
    """Remove the handler registered under ``id``, if any."""
    with _lock:
        _registry.pop(id, None)


def execute(name: str, metadata: Metadata) -> None:
    """Call every handler registered for an event, in attachment order.

    A failing handler is logged and never interrupts the computation being observed.
    """
    with _lock:
        handlers = [handler for events, handler in _registry.values() if name in events]

    for handler in handlers:
        try:
            handler(name, dict(metadata))
        except Exception:
            logger.exception("Error in telemetry handler for event '%s'", name)


@contextmanager
def span(prefix: str, start_metadata: Metadata) -> Iterator[Collector]:
    """Emit ``{prefix}.start`` and then ``{prefix}.stop`` or ``{prefix}.exception``.

    The closing event carries ``duration`` and ``cpu_time`` along with the start
    metadata and anything added to the yielded :class:`Collector`. Exception events add
    the error type, message and formatted traceback.

    Example:
        >>> with telemetry.span("wavelab.evolve.run", {"scheme": "strang_spectral"}) as c:
        ...     trajectory = run()
        ...     c.add({"reason": trajectory.reason})
    """
    started = time.monotonic_ns()
    cpu_started = time.process_time_ns()
    collector = Collector()

    def finish(suffix: str, **extra: Any) -> None:
        now = time.monotonic_ns()
        timing = {
            "system_time": now,
            "duration": now - started,
            "cpu_time": time.process_time_ns() - cpu_started,
        }

        execute(f"{prefix}.{suffix}", {**timing, **extra, **start_metadata, **collector.metadata})

    execute(f"{prefix}.start", {"system_time": started, **start_metadata})

    try:
        yield collector
    except Exception as error:
        finish(
            "exception",
            error_type=type(error).__name__,
            error_message=str(error),
            traceback=traceback.format_exc(),
        )
        raise

    finish("stop")
