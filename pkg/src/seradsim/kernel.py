"""Deterministic discrete-event kernel with integer picosecond time.

Events with equal timestamps fire in scheduling order (FIFO tiebreak via a
monotone sequence counter), so a run is reproducible bit-for-bit on any
platform. The kernel holds no RNG; randomness belongs to the campaign layer.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

Time = int  # picoseconds, non-negative

MAX_TIME: Time = 2**62  # arithmetic guard; exceeding it is a bug, not a wrap


class SchedulingInPast(Exception):
    """Raised when an event is scheduled before the current simulation time."""


class TimeOverflow(Exception):
    """Raised when time arithmetic leaves the representable range."""


@dataclass
class SimStats:
    events_processed: int
    final_time: Time
    deadlocked: bool


class Simulator:
    """Event queue plus simulation clock.

    Deadlock policy: a run is deadlocked when, with a watchdog armed, no
    progress mark arrives for `watchdog` consecutive picoseconds of the
    requested horizon. What counts as progress (a token completing) is up
    to the model, which calls :meth:`progress`. A queue that drains long
    before `until` without fresh progress is likewise deadlocked: nothing
    can ever happen again.
    """

    def __init__(self) -> None:
        self._queue: list[tuple[Time, int, Callable[[], None]]] = []
        self._live: set[int] = set()
        self._seq = 0
        self.now: Time = 0
        self._last_progress: Time = 0
        self.events_processed = 0

    def schedule(self, at: Time, action: Callable[[], None]) -> int:
        """Queue `action` to run at time `at`; returns a cancellation handle."""
        if at < self.now:
            raise SchedulingInPast(f"schedule at {at} ps but now is {self.now} ps")
        if at > MAX_TIME:
            raise TimeOverflow(f"schedule at {at} ps exceeds MAX_TIME")
        self._seq += 1
        heapq.heappush(self._queue, (at, self._seq, action))
        self._live.add(self._seq)
        return self._seq

    def after(self, delay: Time, action: Callable[[], None]) -> int:
        return self.schedule(self.now + delay, action)

    def cancel(self, event_id: int) -> bool:
        """True iff the event had not yet fired and is now removed."""
        if event_id in self._live:
            self._live.discard(event_id)
            return True
        return False

    def progress(self) -> None:
        """Mark observable progress; feeds the deadlock watchdog."""
        self._last_progress = self.now

    def run(self, until: Time, watchdog: Time = 0) -> SimStats:
        """Process events in (fire_at, seq) order until the queue empties or
        `until` passes; flag deadlock per the watchdog policy."""
        if until <= self.now:
            raise ValueError(f"run until {until} ps but now is {self.now} ps")
        deadlocked = False
        while self._queue:
            at, seq, action = self._queue[0]
            if at > until:
                break
            if watchdog and at - self._last_progress > watchdog:
                deadlocked = True
                break
            heapq.heappop(self._queue)
            if seq not in self._live:
                continue
            self._live.discard(seq)
            self.now = at
            self.events_processed += 1
            action()
        ran_out = not self._queue or self._queue[0][0] > until
        if watchdog and ran_out and until - self._last_progress > watchdog:
            deadlocked = True
        return SimStats(self.events_processed, self.now, deadlocked)
