"""Background agent: speculative prefetch into the semantic cache.

Runs off the conversation stream, never on the answer path.  Per user
utterance it does three things: retrieve for the utterance itself
(always), predict likely follow-up topics (rate limited), and prefetch
store results for each prediction concurrently.  Priority retrieval
events, emitted by the foreground agent on a cache miss, trigger a
wider retrieval pass that bypasses the rate limiter.

Nothing here may surface an exception to the conversation: every
failure is recorded on the per-turn report and swallowed.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field, replace

from .clock import Clock, RealClock
from .conversation_stream import ConversationEvent, ConversationStream, EventKind, Subscription
from .embedding import Embedder
from .errors import PredictorUnavailable
from .predictor import KeywordPredictor, Prediction, Predictor, PredictorConfig
from .semantic_cache import PutOutcome, SemanticCache, Source
from .vector_store import VectorStore, with_embedding

logger = logging.getLogger(__name__)

_NEW_ENTRY = (PutOutcome.INSERTED, PutOutcome.EVICTED_THEN_INSERTED)


@dataclass
class SlowThinkerConfig:
    prefetch_top_k: int = 10
    rate_limit_seconds: float = 0.5
    priority_k_multiplier: int = 2
    predictor: PredictorConfig = field(default_factory=PredictorConfig)

    def __post_init__(self):
        if self.prefetch_top_k < 1:
            raise ValueError("prefetch_top_k must be >= 1")
        if self.rate_limit_seconds < 0:
            raise ValueError("rate_limit_seconds must be >= 0")
        if self.priority_k_multiplier < 1:
            raise ValueError("priority_k_multiplier must be >= 1")


@dataclass
class PrefetchReport:
    """What one utterance caused the background agent to do.

    Cached counts are new insertions; puts that merged into an existing
    entry via dedup are excluded, which is why prefetched can be smaller
    than predictions_made * prefetch_top_k.
    """

    turn_index: int = 0
    direct_cached: int = 0
    predictions_made: int = 0
    prefetched: int = 0
    rate_limited: bool = False
    degraded: bool = False
    errors: tuple[str, ...] = ()


class SlowThinker:
    """Consumes conversation events and keeps the cache warm."""

    def __init__(
        self,
        cache: SemanticCache,
        store: VectorStore,
        embedder: Embedder,
        stream: ConversationStream,
        cfg: SlowThinkerConfig | None = None,
        clock: Clock | None = None,
        predictor: Predictor | None = None,
    ):
        self._cache = cache
        self._store = store
        self._embedder = embedder
        self._stream = stream
        self.cfg = cfg or SlowThinkerConfig()
        self._clock = clock or RealClock()
        self._predictor = predictor or KeywordPredictor(self.cfg.predictor)
        self._fallback = KeywordPredictor(replace(self.cfg.predictor, strategy="keyword"))
        self._last_prediction_time: float | None = None
        self.reports: dict[int, PrefetchReport] = {}

    async def run(self, subscription: Subscription) -> None:
        """Event loop body; exits when the stream closes."""
        while True:
            event = await subscription.next_event()
            if event is None:
                return
            if event.kind is EventKind.USER_UTTERANCE:
                report = await self.on_user_utterance(event, now=self._clock.now())
                self.reports[event.turn_index] = report
            elif event.kind is EventKind.PRIORITY_RETRIEVAL:
                await self.on_priority_retrieval(event, now=self._clock.now())

    async def on_user_utterance(
        self, event: ConversationEvent, now: float | None = None
    ) -> PrefetchReport:
        if now is None:
            now = self._clock.now()
        report = PrefetchReport(turn_index=event.turn_index)

        # Step 1, direct retrieval: never rate limited, the utterance is
        # already a demonstrated information need.
        try:
            report.direct_cached = await self._fetch_into_cache(
                event.text, self.cfg.prefetch_top_k, Source.DIRECT
            )
        except Exception as exc:
            logger.warning("direct prefetch failed for turn %d: %s", event.turn_index, exc)
            report.errors += (f"direct: {exc}",)

        # Steps 2 and 3, prediction and speculative prefetch.
        last = self._last_prediction_time
        if last is not None and now - last < self.cfg.rate_limit_seconds:
            report.rate_limited = True
            return report
        self._last_prediction_time = now

        predictions = await self._predict(event, report)
        report.predictions_made = len(predictions)
        if not predictions:
            return report

        tasks = [
            self._fetch_into_cache(p.text, self.cfg.prefetch_top_k, Source.PREDICTION)
            for p in predictions
        ]
        for prediction, result in zip(
            predictions, await asyncio.gather(*tasks, return_exceptions=True)
        ):
            if isinstance(result, BaseException):
                logger.warning("prefetch failed for %r: %s", prediction.text, result)
                report.errors += (f"prefetch {prediction.text!r}: {result}",)
            else:
                report.prefetched += result
        return report

    async def on_priority_retrieval(
        self, event: ConversationEvent, now: float | None = None
    ) -> int:
        """Wider retrieval around a missed query; bypasses the rate limiter."""
        k = self.cfg.prefetch_top_k * self.cfg.priority_k_multiplier
        try:
            return await self._fetch_into_cache(event.text, k, Source.PRIORITY)
        except Exception as exc:
            logger.warning("priority retrieval failed for %r: %s", event.text, exc)
            return 0

    async def _predict(self, event: ConversationEvent, report: PrefetchReport) -> list[Prediction]:
        context = self._stream.window_context(self.cfg.predictor.context_turns)
        try:
            return await self._predictor.predict(context, event.turn_index)
        except PredictorUnavailable as exc:
            logger.warning("predictor unavailable, using keyword fallback: %s", exc)
            report.degraded = True
            report.errors += (f"predictor: {exc}",)
        except Exception as exc:
            logger.warning("predictor failed for turn %d: %s", event.turn_index, exc)
            report.degraded = True
            report.errors += (f"predictor: {exc}",)
            return []
        try:
            return await self._fallback.predict(context, event.turn_index)
        except Exception as exc:
            logger.warning("keyword fallback failed for turn %d: %s", event.turn_index, exc)
            report.errors += (f"fallback: {exc}",)
            return []

    async def _fetch_into_cache(self, text: str, k: int, source: Source) -> int:
        """Embed, search, cache; returns how many entries were newly inserted."""
        query = await self._embedder.embed(text)
        results = await self._store.search(query, k)
        inserted = 0
        for r in results:
            chunk = await with_embedding(r.chunk, self._embedder)
            outcome = self._cache.put(chunk, r.score, source, now=self._clock.now())
            if outcome in _NEW_ENTRY:
                inserted += 1
        return inserted
