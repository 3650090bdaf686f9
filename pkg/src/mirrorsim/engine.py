"""Discrete-event core: event queue, simulation clock and named RNG streams.

Times are integer microseconds internally. Public helpers accept seconds and
quantize with :func:`to_us`, so equal-time orderings never depend on float
rounding.
"""

from __future__ import annotations

import enum
import heapq
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

US_PER_S = 1_000_000


def to_us(seconds: float) -> int:
    """Quantize a duration or instant in seconds to whole microseconds."""
    return int(round(seconds * US_PER_S))


def to_s(us: int) -> float:
    return us / US_PER_S


class EventKind(enum.Enum):
    DELIVERY = "delivery"
    WAYPOINT = "waypoint"
    ROUND_EXPIRY = "round"
    ROUND_PHASE = "phase"
    TRAFFIC = "traffic"
    WATCHDOG_TIMEOUT = "watchdog"
    DISCOVERY_TIMEOUT = "discovery"
    TRANSMIT = "transmit"
    GENERIC = "generic"


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled in the past (a logic bug)."""


@dataclass(eq=False)
class Event:
    time: int
    seq: int
    kind: EventKind
    action: Callable[..., Any] | None = None
    payload: tuple = ()
    cancelled: bool = field(default=False, repr=False)
    fired: bool = field(default=False, repr=False)

    def __lt__(self, other: "Event") -> bool:
        return (self.time, self.seq) < (other.time, other.seq)

    @property
    def seconds(self) -> float:
        return to_s(self.time)


class Engine:
    """Single-threaded event loop with FIFO tie-breaking among equal times.

    Cancellation is lazy: a cancelled event stays in the heap and is skipped
    when popped.
    """

    def __init__(self) -> None:
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = 0
        self.clock = 0
        self.dispatched = 0
        self._live = 0

    @property
    def now(self) -> float:
        return to_s(self.clock)

    def __len__(self) -> int:
        return self._live

    def pending(self):
        """Live events in dispatch order."""
        return [e for _, _, e in sorted(self._queue) if not e.cancelled]

    def schedule_us(self, time: int, kind: EventKind, action=None, payload: tuple = ()) -> Event:
        if time < self.clock:
            raise SchedulingError(f"event at {time} us scheduled before clock {self.clock} us")
        ev = Event(time, self._seq, kind, action, payload)
        heapq.heappush(self._queue, (time, self._seq, ev))
        self._seq += 1
        self._live += 1
        return ev

    def schedule(self, time: float, kind: EventKind, action=None, payload: tuple = ()) -> Event:
        """Schedule ``action(*payload)`` at absolute time ``time`` seconds."""
        return self.schedule_us(to_us(time), kind, action, payload)

    def schedule_in_us(self, delay: int, kind: EventKind, action=None, payload: tuple = ()) -> Event:
        return self.schedule_us(self.clock + delay, kind, action, payload)

    def cancel(self, handle: Event) -> bool:
        if handle.cancelled or handle.fired:
            return False
        handle.cancelled = True
        self._live -= 1
        return True

    def run_until(self, horizon: float) -> int:
        return self.run_until_us(to_us(horizon))

    def run_until_us(self, horizon: int) -> int:
        """Dispatch every event with time <= horizon; the clock ends at horizon."""
        if horizon < self.clock:
            raise SchedulingError(f"horizon {horizon} us precedes clock {self.clock} us")
        queue = self._queue
        count = 0
        pop = heapq.heappop
        while queue and queue[0][0] <= horizon:
            ev = pop(queue)[2]
            if ev.cancelled:
                continue
            self.clock = ev.time
            ev.fired = True
            self._live -= 1
            count += 1
            if ev.action is not None:
                ev.action(*ev.payload)
        self.clock = horizon
        self.dispatched += count
        return count


STREAMS = ("mobility", "traffic", "selfish-assign", "selfish-drop", "jitter")


class RngStreams:
    """Named, independent random streams derived from one 64-bit seed.

    ``get("mobility", 7)`` always yields the same PCG64 sequence for the same
    seed, whatever other streams were consumed before it.
    """

    def __init__(self, seed: int) -> None:
        self.seed = int(seed) & (2**64 - 1)
        self._cache: dict[tuple, np.random.Generator] = {}

    @staticmethod
    def _label_key(label: str) -> int:
        return zlib.crc32(label.encode("utf-8"))

    def get(self, label: str, *sub: int) -> np.random.Generator:
        key = (label, *sub)
        gen = self._cache.get(key)
        if gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=(self._label_key(label), *sub))
            gen = np.random.Generator(np.random.PCG64(ss))
            self._cache[key] = gen
        return gen
