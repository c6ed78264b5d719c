"""Discrete-event core: integer-nanosecond clock and a time-ordered event queue."""

from __future__ import annotations

import enum
import heapq
from typing import Any, Callable

NS = 1
US = 1_000
MS = 1_000_000
S = 1_000_000_000


class SimulationError(RuntimeError):
    """Raised on misuse of the engine (e.g. scheduling in the past)."""


class EventKind(enum.Enum):
    TIMER = "timer-expired"
    FRAME_ARRIVAL = "frame-arrival"
    TX_END = "tx-end"
    ACK_TIMEOUT = "ack-timeout"
    SOURCE_TICK = "source-tick"
    LINK_DELIVERY = "link-delivery"


class Event:
    """A pending callback. The object itself doubles as the cancellation handle."""

    __slots__ = ("fire_at", "seq", "kind", "target", "callback", "args", "pending")

    def __init__(self, fire_at: int, seq: int, kind: EventKind, target: Any,
                 callback: Callable[..., Any], args: tuple):
        self.fire_at = fire_at
        self.seq = seq
        self.kind = kind
        self.target = target
        self.callback = callback
        self.args = args
        self.pending = True

    def __lt__(self, other: "Event") -> bool:
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)

    def __repr__(self) -> str:
        return f"Event(t={self.fire_at}, seq={self.seq}, kind={self.kind.value}, target={self.target!r})"


EventHandle = Event


class Engine:
    """Single-threaded event scheduler.

    Events fire in ``(fire_at, seq)`` order, so equal timestamps run in
    insertion order. Cancellation is lazy: cancelled entries stay in the
    heap and are skipped when popped.
    """

    def __init__(self, trace: bool = False):
        self.now = 0
        self._heap: list[Event] = []
        self._seq = 0
        self._pending = 0
        self.executed = 0
        self.trace: list[tuple[int, int, str, str]] | None = [] if trace else None

    def __len__(self) -> int:
        return self._pending

    def schedule(self, fire_at: int, callback: Callable[..., Any], *args: Any,
                 kind: EventKind = EventKind.TIMER, target: Any = None) -> Event:
        if not isinstance(fire_at, int):
            raise TypeError(f"fire_at must be integer nanoseconds, got {type(fire_at).__name__}")
        if fire_at < self.now:
            raise SimulationError(f"cannot schedule at {fire_at} ns, clock is already {self.now} ns")
        ev = Event(fire_at, self._seq, kind, target, callback, args)
        self._seq += 1
        self._pending += 1
        heapq.heappush(self._heap, ev)
        return ev

    def schedule_in(self, delay: int, callback: Callable[..., Any], *args: Any,
                    kind: EventKind = EventKind.TIMER, target: Any = None) -> Event:
        return self.schedule(self.now + delay, callback, *args, kind=kind, target=target)

    def cancel(self, handle: Event | None) -> bool:
        if handle is None or not handle.pending:
            return False
        handle.pending = False
        self._pending -= 1
        return True

    def peek(self) -> int | None:
        """Timestamp of the next pending event, if any."""
        heap = self._heap
        while heap and not heap[0].pending:
            heapq.heappop(heap)
        return heap[0].fire_at if heap else None

    def run(self, until: int) -> int:
        """Execute every pending event with ``fire_at <= until``.

        Returns the number of events executed. The clock is left at
        ``until`` (or where it already was, if that is later).
        """
        heap = self._heap
        count = 0
        while heap:
            ev = heap[0]
            if not ev.pending:
                heapq.heappop(heap)
                continue
            if ev.fire_at > until:
                break
            heapq.heappop(heap)
            ev.pending = False
            self._pending -= 1
            self.now = ev.fire_at
            if self.trace is not None:
                self.trace.append((ev.fire_at, ev.seq, ev.kind.value, str(ev.target)))
            ev.callback(*ev.args)
            count += 1
        self.executed += count
        if until > self.now:
            self.now = until
        return count
