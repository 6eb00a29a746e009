"""The authoritative document index.

Three layers share one async interface:

* :class:`InMemoryVectorStore` keeps a flat float32 matrix and serves
  exact brute-force cosine search.  At knowledge-base scale (tens of
  chunks) a flat scan beats any approximate index and stays trivially
  verifiable against an exhaustive oracle.
* :class:`LatencyInjectedStore` wraps any store and sleeps a seeded,
  reproducible delay before each search, simulating a remote deployment.
  Delays sleep on the injected clock, so a virtual clock turns a multi-
  minute benchmark into milliseconds of real time.
* :class:`RemoteVectorStore` talks to a Qdrant-compatible HTTP endpoint.

Reads take a reference to an immutable snapshot and scan without holding
the lock, so searches run concurrently while upserts stay exclusive.
"""

from __future__ import annotations

import itertools
import os
import random
import threading
import uuid
from dataclasses import dataclass, field, replace

import httpx
import numpy as np

from .clock import Clock, RealClock
from .embedding import Embedder, UnitVector
from .errors import DimensionMismatch, NetworkError, ProtocolError

VDB_API_KEY_ENV = "MEMROUTER_VDB_API_KEY"


@dataclass
class DocumentChunk:
    """One indexable piece of a document.

    ``embedding`` is None between splitting and ingest; every store and
    cache boundary requires it to be set and of the right dimension.
    """

    chunk_id: str
    doc_id: str
    text: str
    embedding: UnitVector | None = None


@dataclass
class SearchResult:
    chunk: DocumentChunk
    score: float
    latency_ms: float


@dataclass
class LatencyModel:
    """Seeded delay distribution for simulated remote search.

    kind ``none`` injects nothing, ``fixed`` always sleeps ``lo_ms``,
    ``uniform`` draws from [lo_ms, hi_ms].  The i-th delay is a pure
    function of (seed, i), independent of timing or interleaving.
    """

    kind: str = "uniform"
    lo_ms: float = 97.0
    hi_ms: float = 307.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "fixed", "uniform"):
            raise ValueError(f"unknown latency kind {self.kind!r}")
        if not 0 <= self.lo_ms <= self.hi_ms:
            raise ValueError("need 0 <= lo_ms <= hi_ms")

    def delay_ms(self, index: int) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "fixed":
            return self.lo_ms
        return random.Random((self.seed << 64) + index).uniform(self.lo_ms, self.hi_ms)


class VectorStore:
    """Async store interface shared by local, wrapped, and remote backends."""

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    async def upsert(self, chunks: list[DocumentChunk]) -> int:
        raise NotImplementedError

    async def search(self, query: UnitVector, k: int) -> list[SearchResult]:
        raise NotImplementedError


@dataclass
class _Snapshot:
    matrix: np.ndarray
    chunks: tuple[DocumentChunk, ...]
    rows: dict[str, int] = field(default_factory=dict)


class InMemoryVectorStore(VectorStore):
    """Exact flat index over float32 unit vectors.

    Ties in score resolve to the earliest-inserted chunk so that search
    output is reproducible run to run.
    """

    def __init__(self, dimension: int, clock: Clock | None = None):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self._dim = dimension
        self._clock = clock or RealClock()
        self._write_lock = threading.Lock()
        self._state = _Snapshot(np.empty((0, dimension), dtype=np.float32), ())

    @property
    def dimension(self) -> int:
        return self._dim

    @property
    def size(self) -> int:
        return len(self._state.chunks)

    async def upsert(self, chunks: list[DocumentChunk]) -> int:
        for chunk in chunks:
            if chunk.embedding is None:
                raise DimensionMismatch(self._dim, 0, f"upsert {chunk.chunk_id}")
            if chunk.embedding.shape[0] != self._dim:
                raise DimensionMismatch(
                    self._dim, chunk.embedding.shape[0], f"upsert {chunk.chunk_id}"
                )
        with self._write_lock:
            old = self._state
            items = list(old.chunks)
            rows = dict(old.rows)
            for chunk in chunks:
                row = rows.get(chunk.chunk_id)
                if row is None:
                    rows[chunk.chunk_id] = len(items)
                    items.append(chunk)
                else:
                    items[row] = chunk
            if items:
                matrix = np.stack([c.embedding for c in items]).astype(np.float32)
            else:
                matrix = np.empty((0, self._dim), dtype=np.float32)
            self._state = _Snapshot(matrix, tuple(items), rows)
        return len(chunks)

    async def search(self, query: UnitVector, k: int) -> list[SearchResult]:
        if k <= 0:
            raise ValueError("k must be positive")
        started = self._clock.now()
        snapshot = self._state
        q = np.asarray(query, dtype=np.float32)
        if q.shape != (self._dim,):
            raise DimensionMismatch(self._dim, q.shape[0] if q.ndim == 1 else -1, "search")
        if not snapshot.chunks:
            return []
        scores = snapshot.matrix @ q
        # Stable sort on the negated scores keeps insertion order inside ties.
        order = np.argsort(-scores, kind="stable")[:k]
        latency_ms = max(0.0, (self._clock.now() - started) * 1000.0)
        return [
            SearchResult(
                chunk=snapshot.chunks[i],
                score=float(np.clip(scores[i], -1.0, 1.0)),
                latency_ms=latency_ms,
            )
            for i in order
        ]


class LatencyInjectedStore(VectorStore):
    """Store wrapper that sleeps a seeded delay before every search.

    The delay is awaited outside any lock, so overlapping searches overlap
    their delays instead of queueing.  Result content is untouched; only
    latency_ms is rewritten to the full observed round trip.
    """

    def __init__(self, inner: VectorStore, model: LatencyModel, clock: Clock | None = None):
        self._inner = inner
        self._model = model
        self._clock = clock or RealClock()
        self._calls = itertools.count()
        self._counter_lock = threading.Lock()

    @property
    def dimension(self) -> int:
        return self._inner.dimension

    async def upsert(self, chunks: list[DocumentChunk]) -> int:
        return await self._inner.upsert(chunks)

    async def search(self, query: UnitVector, k: int) -> list[SearchResult]:
        started = self._clock.now()
        with self._counter_lock:
            index = next(self._calls)
        delay_ms = self._model.delay_ms(index)
        if delay_ms > 0:
            await self._clock.sleep(delay_ms / 1000.0)
        results = await self._inner.search(query, k)
        latency_ms = max(0.0, (self._clock.now() - started) * 1000.0)
        return [replace(r, latency_ms=latency_ms) for r in results]


class RemoteVectorStore(VectorStore):
    """Client for a Qdrant-compatible points API.

    Searches POST ``/collections/{name}/points/search`` and read the
    ``result`` array; payloads carry text and doc_id since the wire does
    not return vectors (callers re-embed text where a vector is needed).
    """

    def __init__(
        self,
        endpoint: str,
        collection: str,
        dimension: int,
        clock: Clock | None = None,
        transport: httpx.AsyncBaseTransport | None = None,
        timeout_s: float = 30.0,
    ):
        if not endpoint or not collection:
            raise ValueError("remote store needs endpoint and collection")
        self._endpoint = endpoint.rstrip("/")
        self._collection = collection
        self._dim = dimension
        self._clock = clock or RealClock()
        headers = {}
        api_key = os.environ.get(VDB_API_KEY_ENV)
        if api_key:
            headers["api-key"] = api_key
        self._client = httpx.AsyncClient(headers=headers, timeout=timeout_s, transport=transport)

    @property
    def dimension(self) -> int:
        return self._dim

    async def upsert(self, chunks: list[DocumentChunk]) -> int:
        points = []
        for chunk in chunks:
            if chunk.embedding is None or chunk.embedding.shape[0] != self._dim:
                got = 0 if chunk.embedding is None else chunk.embedding.shape[0]
                raise DimensionMismatch(self._dim, got, f"upsert {chunk.chunk_id}")
            points.append(
                {
                    # Qdrant wants UUID or integer ids; derive a stable UUID
                    # and keep the readable id in the payload.
                    "id": str(uuid.uuid5(uuid.NAMESPACE_URL, chunk.chunk_id)),
                    "vector": [float(x) for x in chunk.embedding],
                    "payload": {
                        "text": chunk.text,
                        "doc_id": chunk.doc_id,
                        "chunk_id": chunk.chunk_id,
                    },
                }
            )
        url = f"{self._endpoint}/collections/{self._collection}/points"
        try:
            response = await self._client.put(url, json={"points": points})
        except httpx.HTTPError as exc:
            raise NetworkError(f"vector upsert failed: {exc}") from exc
        if response.status_code not in (200, 201, 202):
            raise NetworkError(f"vector upsert returned HTTP {response.status_code}")
        return len(points)

    async def search(self, query: UnitVector, k: int) -> list[SearchResult]:
        if k <= 0:
            raise ValueError("k must be positive")
        q = np.asarray(query, dtype=np.float32)
        if q.shape != (self._dim,):
            raise DimensionMismatch(self._dim, q.shape[0] if q.ndim == 1 else -1, "search")
        url = f"{self._endpoint}/collections/{self._collection}/points/search"
        body = {"vector": [float(x) for x in q], "limit": k, "with_payload": True}
        started = self._clock.now()
        try:
            response = await self._client.post(url, json=body)
        except httpx.HTTPError as exc:
            raise NetworkError(f"vector search failed: {exc}") from exc
        latency_ms = max(0.0, (self._clock.now() - started) * 1000.0)
        if response.status_code != 200:
            raise NetworkError(f"vector search returned HTTP {response.status_code}")
        try:
            rows = response.json()["result"]
            results = []
            for row in rows:
                payload = row.get("payload") or {}
                score = float(row["score"])
                if not -1.0 <= score <= 1.0:
                    raise ProtocolError(f"cosine score {score} outside [-1, 1]")
                results.append(
                    SearchResult(
                        chunk=DocumentChunk(
                            chunk_id=str(payload.get("chunk_id") or row["id"]),
                            doc_id=str(payload.get("doc_id", "")),
                            text=str(payload.get("text", "")),
                            embedding=None,
                        ),
                        score=score,
                        latency_ms=latency_ms,
                    )
                )
        except ProtocolError:
            raise
        except (ValueError, LookupError, TypeError) as exc:
            raise ProtocolError(f"malformed search response: {exc}") from exc
        return results

    async def aclose(self) -> None:
        await self._client.aclose()


async def with_embedding(chunk: DocumentChunk, embedder: Embedder) -> DocumentChunk:
    """Return the chunk with an embedding, computing one if absent."""
    if chunk.embedding is not None:
        return chunk
    vector = await embedder.embed(chunk.text)
    return replace(chunk, embedding=vector)
