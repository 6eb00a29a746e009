"""Injectable time sources.

Every component that reads timestamps, sleeps, or measures durations does so
through a clock object, never through the time module directly.  That makes
TTL logic testable and lets the benchmark harness replace hours of real
sleeping with a deterministic virtual timeline.

Two implementations:

* :class:`RealClock` wraps the monotonic clock and ``asyncio.sleep``.
* :class:`VirtualClock` keeps time as a plain counter.  ``sleep`` parks the
  caller on a timer heap and a loop callback advances the counter to the
  earliest wake-up, so concurrent sleeps overlap exactly as they would in
  real time while the whole program runs at CPU speed.  Timer ties break by
  registration order, which keeps task interleaving reproducible run to run.
"""

from __future__ import annotations

import asyncio
import heapq
import itertools
import time


class Clock:
    """Interface: current time in seconds, async sleep, simulated CPU charge."""

    def now(self) -> float:
        raise NotImplementedError

    async def sleep(self, seconds: float) -> None:
        raise NotImplementedError

    def charge(self, seconds: float) -> None:
        """Account for modeled work without yielding.

        On a real clock this is a no-op (the work itself took the time); on a
        virtual clock it advances the timeline so measured durations come out
        deterministic.
        """
        raise NotImplementedError


class RealClock(Clock):
    """Monotonic wall time. The default for interactive use."""

    def now(self) -> float:
        return time.monotonic()

    async def sleep(self, seconds: float) -> None:
        await asyncio.sleep(max(0.0, seconds))

    def charge(self, seconds: float) -> None:
        pass


class VirtualClock(Clock):
    """Deterministic simulated time driven by the running event loop.

    All state lives on this object; no background thread.  A task that calls
    :meth:`sleep` is woken by a ``call_soon`` tick that pops the earliest
    timer.  Because ``call_soon`` callbacks run only after currently runnable
    tasks have blocked, CPU-bound work is never preempted by a time jump in
    the middle of a step, and the resulting schedule is a pure function of
    the program itself.
    """

    def __init__(self, start: float = 0.0):
        self._now = float(start)
        self._timers: list[tuple[float, int, asyncio.Future]] = []
        self._seq = itertools.count()
        self._tick_scheduled = False

    def now(self) -> float:
        return self._now

    def charge(self, seconds: float) -> None:
        if seconds > 0:
            self._now += seconds

    async def sleep(self, seconds: float) -> None:
        if seconds <= 0:
            await asyncio.sleep(0)
            return
        loop = asyncio.get_running_loop()
        fut: asyncio.Future = loop.create_future()
        heapq.heappush(self._timers, (self._now + seconds, next(self._seq), fut))
        self._schedule_tick(loop)
        await fut

    def _schedule_tick(self, loop: asyncio.AbstractEventLoop) -> None:
        if not self._tick_scheduled:
            self._tick_scheduled = True
            loop.call_soon(self._tick, loop)

    def _tick(self, loop: asyncio.AbstractEventLoop) -> None:
        ready = getattr(loop, "_ready", None)
        if ready is not None and len(ready) > 0:
            # Other callbacks are runnable (task wake-ups, future completion
            # hops).  Time may only jump once everything that can still make
            # progress at the current instant has run, so step aside and try
            # again after this batch.
            loop.call_soon(self._tick, loop)
            return
        self._tick_scheduled = False
        while self._timers:
            wake, _, fut = heapq.heappop(self._timers)
            if fut.cancelled():
                continue
            self._now = max(self._now, wake)
            fut.set_result(None)
            break
        if self._timers:
            # One wake-up per callback so freshly runnable tasks get the loop
            # before the next timer fires.
            self._schedule_tick(loop)
