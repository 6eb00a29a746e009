"""Bus and window tests: ordering, fan-out, close semantics, truncation."""

import asyncio

import pytest

from memrouter.conversation_stream import (
    ConversationEvent,
    ConversationStream,
    EventKind,
    SlidingWindow,
)
from memrouter.errors import BusClosed


def _event(kind, turn, text):
    return ConversationEvent(kind=kind, turn_index=turn, text=text, timestamp=float(turn))


def _utter(turn, text):
    return _event(EventKind.USER_UTTERANCE, turn, text)


def test_single_subscriber_fifo():
    async def run():
        bus = ConversationStream()
        sub = bus.subscribe()
        bus.publish(_utter(0, "e1"))
        bus.publish(_utter(1, "e2"))
        assert (await sub.next_event()).text == "e1"
        assert (await sub.next_event()).text == "e2"

    asyncio.run(run())


def test_two_subscribers_both_receive_each_event():
    async def run():
        bus = ConversationStream()
        a, b = bus.subscribe(), bus.subscribe()
        bus.publish(_utter(0, "hello"))
        got_a, got_b = await a.next_event(), await b.next_event()
        assert got_a.text == got_b.text == "hello"
        assert got_a is got_b  # same event object fanned out

    asyncio.run(run())


def test_publish_after_close_raises():
    bus = ConversationStream()
    bus.close()
    with pytest.raises(BusClosed):
        bus.publish(_utter(0, "x"))
    with pytest.raises(BusClosed):
        bus.subscribe()


def test_close_yields_end_of_stream_after_queued_events():
    async def run():
        bus = ConversationStream()
        sub = bus.subscribe()
        bus.publish(_utter(0, "queued"))
        bus.close()
        assert (await sub.next_event()).text == "queued"
        assert await sub.next_event() is None
        assert await sub.next_event() is None  # stays ended

    asyncio.run(run())


def test_late_subscriber_sees_only_later_events():
    async def run():
        bus = ConversationStream()
        bus.subscribe()  # existing consumer, ignored here
        bus.publish(_utter(0, "early"))
        late = bus.subscribe()
        bus.publish(_utter(1, "mid"))
        bus.publish(_utter(2, "late"))
        bus.close()
        got = []
        while (event := await late.next_event()) is not None:
            got.append(event.text)
        assert got == ["mid", "late"]

    asyncio.run(run())


def test_unsubscribed_consumer_stops_receiving():
    async def run():
        bus = ConversationStream()
        sub = bus.subscribe()
        bus.publish(_utter(0, "before"))
        sub.close()
        bus.publish(_utter(1, "after"))
        assert (await sub.next_event()).text == "before"
        assert await sub.next_event() is None

    asyncio.run(run())


def test_concurrent_publishers_keep_per_publisher_order_and_lose_nothing():
    async def run():
        bus = ConversationStream()
        subs = [bus.subscribe(), bus.subscribe()]

        async def publisher(name, count):
            for i in range(count):
                bus.publish(
                    _event(EventKind.TOPIC_SHIFT, 0, f"{name}:{i}")
                )
                await asyncio.sleep(0)

        async def consume(sub):
            seen = []
            while (event := await sub.next_event()) is not None:
                seen.append(event.text)
            return seen

        consumers = [asyncio.create_task(consume(s)) for s in subs]
        await asyncio.gather(publisher("p0", 25), publisher("p1", 25))
        bus.close()
        streams = await asyncio.gather(*consumers)
        for seen in streams:
            assert len(seen) == 50  # 2 subscribers x 50 events, none lost
            for name in ("p0", "p1"):
                per = [int(t.split(":")[1]) for t in seen if t.startswith(name)]
                assert per == list(range(25))
        assert streams[0] == streams[1]

    asyncio.run(run())


def test_user_turn_indexes_must_not_decrease():
    bus = ConversationStream()
    bus.publish(_utter(3, "x"))
    bus.publish(_utter(3, "same is fine"))
    with pytest.raises(ValueError):
        bus.publish(_utter(2, "regression"))


# --- sliding window ----------------------------------------------------------


def test_window_empty():
    bus = ConversationStream()
    assert bus.window_context(10) == []


def test_window_capacity_truncation():
    bus = ConversationStream(window_capacity=10)
    for i in range(1, 13):
        kind = EventKind.USER_UTTERANCE if i % 2 else EventKind.AGENT_RESPONSE
        bus.publish(_event(kind, i, f"t{i}"))
    full = bus.window_context(10)
    assert [text for _, text in full] == [f"t{i}" for i in range(3, 13)]
    last6 = bus.window_context(6)
    assert [text for _, text in last6] == [f"t{i}" for i in range(7, 13)]
    assert [role for role, _ in last6] == ["user", "agent"] * 3


def test_window_ignores_non_turn_events():
    bus = ConversationStream()
    bus.publish(_event(EventKind.SILENCE_DETECTED, 0, ""))
    bus.publish(_event(EventKind.TOPIC_SHIFT, 0, "billing"))
    bus.publish(_event(EventKind.PRIORITY_RETRIEVAL, 0, "missed query"))
    assert bus.window_context(10) == []
    bus.publish(_utter(0, "hi"))
    assert bus.window_context(10) == [("user", "hi")]


def test_window_snapshot_is_readonly():
    bus = ConversationStream()
    bus.publish(_utter(0, "hi"))
    snap = bus.window_context(5)
    snap.append(("user", "mutated"))
    assert bus.window_context(5) == [("user", "hi")]


def test_window_validation():
    with pytest.raises(ValueError):
        SlidingWindow(0)
    with pytest.raises(ValueError):
        ConversationStream().window_context(0)
