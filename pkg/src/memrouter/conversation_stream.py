"""Async event bus between the router and the two agents.

Five event kinds ride the bus.  UserUtterance and AgentResponse also feed
the sliding conversation window; SilenceDetected and TopicShift are
carried but have no built-in consumer behavior; PriorityRetrieval is the
fast path's miss signal to the background agent.

Every subscriber owns an unbounded FIFO queue, so publishing never blocks
and each subscriber sees every event exactly once, in publish order.
Closing the bus enqueues an end-of-stream marker behind any undelivered
events; ``next_event`` then returns None forever.
"""

from __future__ import annotations

import asyncio
from collections import deque
from dataclasses import dataclass
from enum import Enum

from .errors import BusClosed


class EventKind(str, Enum):
    USER_UTTERANCE = "user_utterance"
    AGENT_RESPONSE = "agent_response"
    SILENCE_DETECTED = "silence_detected"
    TOPIC_SHIFT = "topic_shift"
    PRIORITY_RETRIEVAL = "priority_retrieval"


_WINDOW_ROLES = {EventKind.USER_UTTERANCE: "user", EventKind.AGENT_RESPONSE: "agent"}

_END = None


@dataclass(frozen=True)
class ConversationEvent:
    kind: EventKind
    turn_index: int
    text: str
    timestamp: float

    def __post_init__(self):
        if self.turn_index < 0:
            raise ValueError("turn_index must be non-negative")


class SlidingWindow:
    """Last-N conversation turns as (role, text) pairs, oldest first."""

    def __init__(self, capacity: int = 10):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._turns: deque[tuple[str, str]] = deque(maxlen=capacity)

    def append(self, role: str, text: str) -> None:
        self._turns.append((role, text))

    def __len__(self) -> int:
        return len(self._turns)

    def last(self, n: int) -> list[tuple[str, str]]:
        if n <= 0:
            raise ValueError("n must be positive")
        turns = list(self._turns)
        return turns[-n:]


class Subscription:
    """One consumer's view of the bus; consume from a single task."""

    def __init__(self, stream: "ConversationStream"):
        self._stream = stream
        self._queue: asyncio.Queue = asyncio.Queue()
        self._ended = False

    async def next_event(self) -> ConversationEvent | None:
        """Next event in publish order, or None once the stream has ended."""
        if self._ended:
            return _END
        event = await self._queue.get()
        if event is _END:
            self._ended = True
        return event

    def close(self) -> None:
        self._stream._drop(self)
        self._queue.put_nowait(_END)


class ConversationStream:
    """In-process pub/sub bus plus the shared sliding window."""

    def __init__(self, window_capacity: int = 10):
        self._subscribers: list[Subscription] = []
        self._window = SlidingWindow(window_capacity)
        self._closed = False
        self._last_user_turn = -1

    @property
    def closed(self) -> bool:
        return self._closed

    def publish(self, event: ConversationEvent) -> None:
        if self._closed:
            raise BusClosed("cannot publish on a closed stream")
        if event.kind is EventKind.USER_UTTERANCE:
            if event.turn_index < self._last_user_turn:
                raise ValueError(
                    f"user turn {event.turn_index} after turn {self._last_user_turn}"
                )
            self._last_user_turn = event.turn_index
        for sub in list(self._subscribers):
            sub._queue.put_nowait(event)
        role = _WINDOW_ROLES.get(event.kind)
        if role is not None:
            self._window.append(role, event.text)

    def subscribe(self) -> Subscription:
        if self._closed:
            raise BusClosed("cannot subscribe to a closed stream")
        sub = Subscription(self)
        self._subscribers.append(sub)
        return sub

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        for sub in list(self._subscribers):
            sub._queue.put_nowait(_END)
        self._subscribers.clear()

    def window_context(self, n: int) -> list[tuple[str, str]]:
        """Snapshot of the last min(n, length) turns, oldest first."""
        return self._window.last(n)

    def _drop(self, sub: Subscription) -> None:
        if sub in self._subscribers:
            self._subscribers.remove(sub)
