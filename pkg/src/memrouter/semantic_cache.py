"""The shared semantic cache.

Chunks are indexed by their own embeddings in a flat float32 matrix and
served by exact inner-product scan: at a couple thousand entries a single
BLAS matrix-vector product finishes well under a millisecond, which is
the entire point of the cache.

Lifecycle rules, in the order ``put`` applies them: a new chunk whose
nearest existing entry exceeds the dedup threshold refreshes that entry
in place; otherwise a full cache evicts its least recently accessed entry
first; otherwise the chunk is appended.  Entries expire a fixed TTL after
their last (re)insertion; expiry is lazy on reads with explicit
``evict_expired`` for reclamation.

Deletion tombstones the row and compacts the matrix once tombstones pass
a quarter of capacity, so the scan stays dense without per-delete copies.

Concurrency: reads share the lock and scan in parallel, mutations are
exclusive.  Reads do mutate recency and counters; those writes sit behind
a separate micro-lock so parallel reads stay exact.
"""

from __future__ import annotations

import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .clock import Clock, RealClock
from .embedding import UnitVector
from .errors import DimensionMismatch
from .vector_store import DocumentChunk


# float32 rounding leaves an identity dot just shy of 1.0; the threshold
# compare tolerates that so a just-cached chunk always hits at tau <= 1.0.
_SIM_EPS = 1e-6


class Source(str, Enum):
    """How an entry got into the cache."""

    DIRECT = "direct"
    PREDICTION = "prediction"
    MISS_FALLBACK = "miss_fallback"
    PRIORITY = "priority"


class PutOutcome(str, Enum):
    INSERTED = "inserted"
    DEDUP_UPDATED = "dedup_updated"
    EVICTED_THEN_INSERTED = "evicted_then_inserted"


@dataclass
class CacheEntry:
    chunk: DocumentChunk
    relevance_score: float
    inserted_at: float
    expires_at: float
    last_access: float
    source: Source
    seq: int = field(default=0, repr=False)


@dataclass
class CacheConfig:
    max_size: int = 2000
    ttl_seconds: float = 300.0
    similarity_threshold: float = 0.40
    dedup_threshold: float = 0.95

    def __post_init__(self):
        if self.max_size <= 0:
            raise ValueError("max_size must be positive")
        if self.ttl_seconds <= 0:
            raise ValueError("ttl_seconds must be positive")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must be in [0, 1]")
        if not 0.0 <= self.dedup_threshold <= 1.0:
            raise ValueError("dedup_threshold must be in [0, 1]")
        if self.dedup_threshold <= self.similarity_threshold:
            raise ValueError("dedup_threshold must exceed similarity_threshold")


@dataclass
class CacheStats:
    size: int = 0
    hits: int = 0
    misses: int = 0
    puts: int = 0
    dedup_updates: int = 0
    evictions_lru: int = 0
    evictions_ttl: int = 0
    total_get_latency_ms: float = 0.0


class _RWLock:
    """Write-preferring readers-writer lock."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False
        self._writers_waiting = 0

    @contextmanager
    def read(self):
        with self._cond:
            while self._writer or self._writers_waiting:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if self._readers == 0:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            self._writers_waiting += 1
            while self._writer or self._readers:
                self._cond.wait()
            self._writers_waiting -= 1
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()


class SemanticCache:
    """Embedding-indexed cache with TTL, LRU eviction, and dedup merging.

    ``lookup_charge_ms`` is the simulated CPU cost of one lookup; it only
    moves a virtual clock (a real clock ignores charges), which keeps
    benchmark timing deterministic while real deployments measure real
    wall time.
    """

    def __init__(
        self,
        dimension: int,
        config: CacheConfig | None = None,
        clock: Clock | None = None,
        lookup_charge_ms: float = 0.35,
    ):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.config = config or CacheConfig()
        self._dim = dimension
        self._clock = clock or RealClock()
        self._charge_s = max(0.0, lookup_charge_ms) / 1000.0
        self._lock = _RWLock()
        self._touch_lock = threading.Lock()
        self._seq = itertools.count()
        self._stats = CacheStats()
        self._reset_storage()

    def _reset_storage(self):
        self._matrix = np.empty((0, self._dim), dtype=np.float32)
        self._entries: list[CacheEntry | None] = []
        self._expires = np.empty(0, dtype=np.float64)
        self._alive = np.empty(0, dtype=bool)
        self._count = 0  # rows in use, tombstones included
        self._live = 0
        self._tombstones = 0

    @property
    def dimension(self) -> int:
        return self._dim

    @property
    def size(self) -> int:
        return self._live

    def _now(self, now: float | None) -> float:
        return self._clock.now() if now is None else now

    def _check_vector(self, vector, where: str) -> np.ndarray:
        if vector is None:
            raise DimensionMismatch(self._dim, 0, where)
        arr = np.asarray(vector, dtype=np.float32)
        if arr.shape != (self._dim,):
            got = arr.shape[0] if arr.ndim == 1 else -1
            raise DimensionMismatch(self._dim, got, where)
        return arr

    # -- writes ------------------------------------------------------------

    def put(
        self,
        chunk: DocumentChunk,
        relevance_score: float,
        source: Source,
        now: float | None = None,
    ) -> PutOutcome:
        emb = self._check_vector(chunk.embedding, f"cache put {chunk.chunk_id}")
        now = self._now(now)
        with self._lock.write():
            self._stats.puts += 1
            nearest = self._nearest_row(emb)
            if nearest is not None:
                row, sim = nearest
                if sim > self.config.dedup_threshold:
                    entry = self._entries[row]
                    entry.chunk = chunk
                    entry.relevance_score = max(entry.relevance_score, relevance_score)
                    entry.expires_at = now + self.config.ttl_seconds
                    self._matrix[row] = emb
                    self._expires[row] = entry.expires_at
                    self._stats.dedup_updates += 1
                    return PutOutcome.DEDUP_UPDATED
            outcome = PutOutcome.INSERTED
            if self._live >= self.config.max_size:
                self._tombstone(self._lru_row())
                self._stats.evictions_lru += 1
                outcome = PutOutcome.EVICTED_THEN_INSERTED
            entry = CacheEntry(
                chunk=chunk,
                relevance_score=relevance_score,
                inserted_at=now,
                expires_at=now + self.config.ttl_seconds,
                last_access=now,
                source=source,
                seq=next(self._seq),
            )
            self._append(entry, emb)
            self._maybe_compact()
            return outcome

    def evict_expired(self, now: float | None = None) -> int:
        now = self._now(now)
        with self._lock.write():
            removed = 0
            for row in range(self._count):
                if self._entries[row] is not None and self._expires[row] <= now:
                    self._tombstone(row)
                    removed += 1
            self._stats.evictions_ttl += removed
            self._maybe_compact()
            return removed

    def clear(self) -> None:
        with self._lock.write():
            self._reset_storage()

    # -- reads ---------------------------------------------------------------

    def get(
        self,
        query: UnitVector,
        k: int,
        threshold: float | None = None,
        now: float | None = None,
    ) -> list[tuple[CacheEntry, float]]:
        if k <= 0:
            raise ValueError("k must be positive")
        threshold = self.config.similarity_threshold if threshold is None else threshold
        if not 0.0 <= threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        q = self._check_vector(query, "cache get")
        started = self._clock.now()
        now = self._now(now)
        with self._lock.read():
            found: list[tuple[CacheEntry, float]] = []
            if self._count:
                sims = self._matrix[: self._count] @ q
                skip = ~self._alive[: self._count] | (self._expires[: self._count] <= now)
                sims[skip] = -2.0
                # Stable sort so equal similarities keep insertion order.
                for row in np.argsort(-sims, kind="stable")[:k]:
                    sim = float(sims[row])
                    if sim < threshold - _SIM_EPS:
                        break
                    found.append((self._entries[row], min(sim, 1.0)))
            self._clock.charge(self._charge_s)
            elapsed_ms = max(0.0, (self._clock.now() - started) * 1000.0)
            with self._touch_lock:
                for entry, _ in found:
                    entry.last_access = now
                if found:
                    self._stats.hits += 1
                else:
                    self._stats.misses += 1
                self._stats.total_get_latency_ms += elapsed_ms
        return found

    def stats(self) -> CacheStats:
        with self._lock.read():
            with self._touch_lock:
                return replace(self._stats, size=self._live)

    # -- internals (write lock held) ----------------------------------------

    def _nearest_row(self, emb: np.ndarray) -> tuple[int, float] | None:
        if not self._live:
            return None
        sims = self._matrix[: self._count] @ emb
        sims[~self._alive[: self._count]] = -2.0
        row = int(np.argmax(sims))
        return row, float(sims[row])

    def _lru_row(self) -> int:
        victim = None
        key = None
        for row in range(self._count):
            entry = self._entries[row]
            if entry is None:
                continue
            entry_key = (entry.last_access, entry.seq)
            if key is None or entry_key < key:
                victim, key = row, entry_key
        return victim

    def _tombstone(self, row: int) -> None:
        self._entries[row] = None
        self._alive[row] = False
        self._tombstones += 1
        self._live -= 1

    def _append(self, entry: CacheEntry, emb: np.ndarray) -> None:
        if self._count == self._matrix.shape[0]:
            capacity = max(8, self._matrix.shape[0] * 2, self._count + 1)
            matrix = np.empty((capacity, self._dim), dtype=np.float32)
            matrix[: self._count] = self._matrix[: self._count]
            expires = np.empty(capacity, dtype=np.float64)
            expires[: self._count] = self._expires[: self._count]
            alive = np.zeros(capacity, dtype=bool)
            alive[: self._count] = self._alive[: self._count]
            self._matrix, self._expires, self._alive = matrix, expires, alive
        self._matrix[self._count] = emb
        self._expires[self._count] = entry.expires_at
        self._alive[self._count] = True
        self._entries.append(entry)
        self._count += 1
        self._live += 1

    def _maybe_compact(self) -> None:
        if self._tombstones <= 0.25 * self.config.max_size:
            return
        keep = [i for i in range(self._count) if self._entries[i] is not None]
        self._matrix = self._matrix[keep].copy() if keep else np.empty(
            (0, self._dim), dtype=np.float32
        )
        self._expires = self._expires[keep].copy() if keep else np.empty(0, dtype=np.float64)
        self._alive = np.ones(len(keep), dtype=bool)
        self._entries = [self._entries[i] for i in keep]
        self._count = len(keep)
        self._tombstones = 0
