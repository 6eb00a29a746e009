"""Foreground agent: the latency-critical retrieval path.

One call per user turn: embed the query, try the cache, and only on a
miss touch the vector store, writing whatever it returns back into the
cache (so the next query on the topic hits) and publishing a
PriorityRetrieval event so the background agent fetches an expanded
result set around the missed query.

Retrieval latency is reported as the isolated context-fetch cost: cache
lookup time on a hit, store search time on a miss.  Embedding time is
measured separately and never folded in.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .clock import Clock, RealClock
from .conversation_stream import ConversationEvent, ConversationStream, EventKind
from .embedding import Embedder
from .errors import EmbeddingFailed, EmptyQuery, NetworkError
from .semantic_cache import SemanticCache, Source
from .vector_store import DocumentChunk, VectorStore, with_embedding


class RetrievalSource(str, Enum):
    CACHE_HIT = "cache_hit"
    STORE_FALLBACK = "store_fallback"


@dataclass
class RetrievalOutcome:
    source: RetrievalSource
    chunks: list[tuple[DocumentChunk, float]]
    retrieval_latency_ms: float
    embed_latency_ms: float
    degraded: bool = False


@dataclass
class FastTalkerConfig:
    max_context_chunks: int = 10
    fallback_enabled: bool = True
    cache_on_miss: bool = True
    k: int = 10
    # None inherits the cache's similarity threshold, so one knob drives
    # both the cache contract and this agent (threshold sweeps rely on it).
    tau: float | None = None

    def __post_init__(self):
        if self.max_context_chunks < 1:
            raise ValueError("max_context_chunks must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.tau is not None and not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")


def format_context(chunks: list[tuple[DocumentChunk, float]]) -> str:
    """Numbered passages, best first: "[i] ({doc_id}) {text}"."""
    return "\n\n".join(
        f"[{i}] ({chunk.doc_id}) {chunk.text}" for i, (chunk, _) in enumerate(chunks, 1)
    )


class Responder:
    """Turns retrieved context into the spoken reply."""

    async def respond(
        self, query: str, context: str, chunks: list[tuple[DocumentChunk, float]]
    ) -> str:
        raise NotImplementedError


class TemplateResponder(Responder):
    """Deterministic stub; answer quality is out of scope for benchmarks."""

    async def respond(self, query, context, chunks):
        if not chunks:
            return "I don't have reference material for that yet, so here is my best general answer."
        doc_ids = []
        for chunk, _ in chunks:
            if chunk.doc_id not in doc_ids:
                doc_ids.append(chunk.doc_id)
        top_text = chunks[0][0].text.strip()
        head, sep, _ = top_text.partition(". ")
        sentence = head + "." if sep else top_text
        return f"Based on {len(chunks)} passages about {', '.join(doc_ids)}: {sentence}"


class FastTalker:
    """Cache-first retrieval with store fallback and priority signaling."""

    def __init__(
        self,
        cache: SemanticCache,
        store: VectorStore,
        embedder: Embedder,
        stream: ConversationStream,
        cfg: FastTalkerConfig | None = None,
        clock: Clock | None = None,
        responder: Responder | None = None,
    ):
        self._cache = cache
        self._store = store
        self._embedder = embedder
        self._stream = stream
        self.cfg = cfg or FastTalkerConfig()
        self._clock = clock or RealClock()
        self._responder = responder or TemplateResponder()

    @property
    def tau(self) -> float:
        if self.cfg.tau is not None:
            return self.cfg.tau
        return self._cache.config.similarity_threshold

    async def handle_query(self, text: str, turn_index: int = 0) -> tuple[RetrievalOutcome, str]:
        if not text.strip():
            raise EmptyQuery("query text is empty")
        clock = self._clock
        embed_start = clock.now()
        try:
            query = await self._embedder.embed(text)
        except Exception as exc:
            raise EmbeddingFailed(f"could not embed query: {exc}") from exc
        embed_ms = max(0.0, (clock.now() - embed_start) * 1000.0)

        lookup_start = clock.now()
        hits = self._cache.get(query, self.cfg.k, self.tau, now=clock.now())
        lookup_ms = max(0.0, (clock.now() - lookup_start) * 1000.0)

        if hits:
            chunks = [(entry.chunk, sim) for entry, sim in hits]
            outcome = RetrievalOutcome(
                source=RetrievalSource.CACHE_HIT,
                chunks=chunks,
                retrieval_latency_ms=lookup_ms,
                embed_latency_ms=embed_ms,
            )
        else:
            chunks = []
            degraded = not self.cfg.fallback_enabled
            store_ms = 0.0
            if self.cfg.fallback_enabled:
                search_start = clock.now()
                try:
                    results = await self._store.search(query, self.cfg.k)
                except NetworkError:
                    results = []
                    degraded = True
                store_ms = max(0.0, (clock.now() - search_start) * 1000.0)
                chunks = [(r.chunk, r.score) for r in results]
                if self.cfg.cache_on_miss:
                    for r in results:
                        chunk = await with_embedding(r.chunk, self._embedder)
                        self._cache.put(chunk, r.score, Source.MISS_FALLBACK, now=clock.now())
            self._stream.publish(
                ConversationEvent(
                    kind=EventKind.PRIORITY_RETRIEVAL,
                    turn_index=turn_index,
                    text=text,
                    timestamp=clock.now(),
                )
            )
            outcome = RetrievalOutcome(
                source=RetrievalSource.STORE_FALLBACK,
                chunks=chunks,
                retrieval_latency_ms=store_ms,
                embed_latency_ms=embed_ms,
                degraded=degraded,
            )

        shown = outcome.chunks[: self.cfg.max_context_chunks]
        context = format_context(shown)
        response = await self._responder.respond(text, context, shown)
        return outcome, response
