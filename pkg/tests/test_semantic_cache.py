"""Cache tests: pinned examples, lifecycle rules, and a shadow-model oracle.

The model-based property replays random operation sequences against an
independent float64 reimplementation of the cache rules.  Its vector
vocabulary is chosen so that all non-identical pairs have cosine <= 0.913
and every query's similarities are spaced by > 1e-3: dedup can only fire
on exact duplicates and no ordering decision ever rests on float noise,
so implementation and model must agree exactly.
"""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memrouter.clock import VirtualClock
from memrouter.embedding import normalize
from memrouter.errors import DimensionMismatch
from memrouter.semantic_cache import (
    CacheConfig,
    CacheStats,
    PutOutcome,
    SemanticCache,
    Source,
)
from memrouter.vector_store import DocumentChunk

VOCAB = [
    (1, 0, 0), (0, 1, 0), (2, 1, 0), (1, 2, 0),
    (2, 1, 1), (1, 2, 1), (-1, 1, 0), (1, -1, 1),
]
TAUS = (0.05, 0.42, 0.61, 0.87)
V32 = [normalize(np.asarray(v, dtype=np.float32)) for v in VOCAB]
V64 = [np.asarray(v, dtype=np.float64) / np.linalg.norm(v) for v in VOCAB]


def _cache(dim=3, charge=0.0, **cfg):
    return SemanticCache(dim, CacheConfig(**cfg), lookup_charge_ms=charge)


def _chunk(cid, vec, text=None):
    return DocumentChunk(cid, cid.split("#")[0], text or cid, normalize(np.asarray(vec, np.float32)))


# --- put ---------------------------------------------------------------------


def test_put_same_chunk_twice_dedups():
    cache = _cache()
    a = _chunk("a#0", [1, 0, 0])
    assert cache.put(a, 0.8, Source.DIRECT, now=0.0) is PutOutcome.INSERTED
    assert cache.put(a, 0.7, Source.DIRECT, now=1.0) is PutOutcome.DEDUP_UPDATED
    assert cache.size == 1
    assert cache.stats().dedup_updates == 1


def test_put_orthogonal_chunks_both_insert():
    cache = _cache()
    assert cache.put(_chunk("a#0", [1, 0, 0]), 0.5, Source.DIRECT, now=0.0) is PutOutcome.INSERTED
    assert cache.put(_chunk("b#0", [0, 1, 0]), 0.5, Source.DIRECT, now=0.0) is PutOutcome.INSERTED
    assert cache.size == 2


def test_put_full_cache_evicts_least_recently_accessed():
    cache = _cache(max_size=2)
    cache.put(_chunk("a#0", [1, 0, 0]), 0.5, Source.DIRECT, now=0.0)
    cache.put(_chunk("b#0", [0, 1, 0]), 0.5, Source.DIRECT, now=1.0)
    # Touch a#0 so b#0 becomes the LRU victim.
    hits = cache.get(normalize(np.array([1.0, 0.0, 0.0])), 1, 0.4, now=2.0)
    assert hits[0][0].chunk.chunk_id == "a#0"
    out = cache.put(_chunk("c#0", [0, 0, 1]), 0.5, Source.DIRECT, now=3.0)
    assert out is PutOutcome.EVICTED_THEN_INSERTED
    assert cache.size == 2
    remaining = {
        e.chunk.chunk_id
        for e, _ in cache.get(normalize(np.array([1.0, 1.0, 1.0])), 5, 0.0, now=3.0)
    }
    assert remaining == {"a#0", "c#0"}
    assert cache.stats().evictions_lru == 1


def test_dedup_keeps_max_score_and_refreshes_ttl():
    cache = _cache(ttl_seconds=300)
    near = normalize(np.array([1.0, 0.01, 0.0]))  # cosine ~0.99995 to [1,0,0]
    cache.put(_chunk("a#0", [1, 0, 0]), 0.9, Source.DIRECT, now=0.0)
    cache.put(DocumentChunk("a#1", "a", "fresher", near), 0.2, Source.PREDICTION, now=200.0)
    (entry, sim), = cache.get(near, 1, 0.4, now=400.0)
    # Refresh at t=200 pushed expiry to t=500, so t=400 still hits; the
    # surviving entry carries the newer payload and the higher old score.
    assert entry.chunk.chunk_id == "a#1"
    assert entry.relevance_score == 0.9
    assert cache.size == 1


def test_put_wrong_dim_rejected():
    cache = _cache()
    with pytest.raises(DimensionMismatch):
        cache.put(_chunk("a#0", [1, 0, 0, 0]), 0.5, Source.DIRECT, now=0.0)
    with pytest.raises(DimensionMismatch):
        cache.put(DocumentChunk("a#0", "a", "x", None), 0.5, Source.DIRECT, now=0.0)


# --- get ---------------------------------------------------------------------


def test_get_empty_cache():
    cache = _cache()
    assert cache.get(normalize(np.array([1.0, 0.0, 0.0])), 3, 0.4, now=0.0) == []
    assert cache.stats().misses == 1


def test_get_identity_hit():
    cache = _cache()
    v = normalize(np.array([0.3, 0.5, 0.9]))
    cache.put(DocumentChunk("a#0", "a", "x", v), 0.5, Source.DIRECT, now=0.0)
    (entry, sim), = cache.get(v, 1, 0.40, now=1.0)
    assert entry.chunk.chunk_id == "a#0"
    assert sim == pytest.approx(1.0, abs=1e-6)


def test_get_pinned_three_entry_instance():
    # Entries built to have cosines 0.9, 0.5, 0.3 to the query (1,0,0).
    # The 0.5 and 0.3 entries sit at cosine 0.976 to each other, so the
    # default dedup threshold would merge them while building the state;
    # raise it to keep all three distinct.
    cache = _cache(dedup_threshold=0.99)
    vecs = {
        "hi#0": [0.9, np.sqrt(0.19), 0.0],
        "mid#0": [0.5, np.sqrt(0.75), 0.0],
        "lo#0": [0.3, np.sqrt(0.91), 0.0],
    }
    for cid, v in vecs.items():
        cache.put(DocumentChunk(cid, cid.split("#")[0], cid, normalize(np.array(v))), 0.5,
                  Source.DIRECT, now=0.0)
    query = normalize(np.array([1.0, 0.0, 0.0]))
    got = cache.get(query, 2, 0.40, now=1.0)
    assert [e.chunk.chunk_id for e, _ in got] == ["hi#0", "mid#0"]
    assert [round(s, 6) for _, s in got] == [0.9, 0.5]
    # Exhaustive-scan oracle over the same state.
    oracle = sorted(
        ((cid, float(np.dot(normalize(np.array(v, np.float32)), query))) for cid, v in vecs.items()),
        key=lambda t: -t[1],
    )
    expected = [cid for cid, s in oracle if s >= 0.40][:2]
    assert [e.chunk.chunk_id for e, _ in got] == expected


def test_get_touches_only_returned_entries():
    cache = _cache(max_size=2)
    cache.put(_chunk("a#0", [1, 0, 0]), 0.5, Source.DIRECT, now=0.0)
    cache.put(_chunk("b#0", [0, 1, 0]), 0.5, Source.DIRECT, now=1.0)
    cache.get(normalize(np.array([0.0, 1.0, 0.0])), 1, 0.4, now=5.0)  # touches b only
    out = cache.put(_chunk("c#0", [0, 0, 1]), 0.5, Source.DIRECT, now=6.0)
    assert out is PutOutcome.EVICTED_THEN_INSERTED
    live = {e.chunk.chunk_id for e, _ in cache.get(normalize(np.array([1.0, 1.0, 1.0])), 5, 0.0, now=6.0)}
    assert live == {"b#0", "c#0"}  # a#0 had the stale last_access


def test_get_validation():
    cache = _cache()
    q = normalize(np.array([1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        cache.get(q, 0, 0.4, now=0.0)
    with pytest.raises(ValueError):
        cache.get(q, 1, 1.5, now=0.0)
    with pytest.raises(DimensionMismatch):
        cache.get(normalize(np.array([1.0, 0.0])), 1, 0.4, now=0.0)


# --- ttl ----------------------------------------------------------------------


def test_ttl_expiry_at_301_seconds():
    cache = _cache(ttl_seconds=300)
    cache.put(_chunk("a#0", [1, 0, 0]), 0.5, Source.DIRECT, now=0.0)
    assert cache.get(normalize(np.array([1.0, 0.0, 0.0])), 1, 0.4, now=301.0) == []
    assert cache.evict_expired(now=301.0) == 1
    assert cache.size == 0
    assert cache.stats().evictions_ttl == 1


def test_evict_expired_fresh_entries():
    cache = _cache(ttl_seconds=300)
    cache.put(_chunk("a#0", [1, 0, 0]), 0.5, Source.DIRECT, now=0.0)
    assert cache.evict_expired(now=100.0) == 0
    assert cache.size == 1


def test_evict_expired_mixed_set():
    # ttl 100: puts at 0 and 10 expire by t=150, the rest survive.
    cache = _cache(ttl_seconds=100)
    times = {"a#0": 0.0, "b#0": 10.0, "c#0": 200.0, "d#0": 210.0, "e#0": 220.0}
    vecs = {"a#0": V32[0], "b#0": V32[1], "c#0": V32[2], "d#0": V32[6], "e#0": V32[7]}
    for cid, t in times.items():
        cache.put(DocumentChunk(cid, "d", cid, vecs[cid]), 0.5, Source.DIRECT, now=t)
    # Deadlines land at 100, 110, 300, 310, 320; t=250 catches the first two.
    removed = cache.evict_expired(now=250.0)
    assert removed == 2
    assert cache.size == 3
    assert cache.stats().evictions_ttl == 2


# --- stats / clear -------------------------------------------------------------


def test_stats_fresh_cache():
    assert _cache().stats() == CacheStats()


def test_stats_after_put_and_hit():
    cache = _cache()
    v = normalize(np.array([1.0, 0.0, 0.0]))
    cache.put(DocumentChunk("a#0", "a", "x", v), 0.5, Source.DIRECT, now=0.0)
    cache.get(v, 1, 0.4, now=1.0)
    s = cache.stats()
    assert (s.puts, s.hits, s.misses, s.size) == (1, 1, 0, 1)


def test_clear_preserves_lifetime_counters():
    cache = _cache()
    cache.put(_chunk("a#0", [1, 0, 0]), 0.5, Source.DIRECT, now=0.0)
    cache.clear()
    s = cache.stats()
    assert s.size == 0 and s.puts == 1
    assert cache.get(normalize(np.array([1.0, 0.0, 0.0])), 1, 0.4, now=1.0) == []


def test_config_validation():
    for bad in (
        dict(max_size=0),
        dict(ttl_seconds=0),
        dict(similarity_threshold=1.2),
        dict(dedup_threshold=-0.1),
        dict(similarity_threshold=0.5, dedup_threshold=0.5),
    ):
        with pytest.raises(ValueError):
            CacheConfig(**bad)


def test_virtual_clock_charge_is_deterministic():
    clock = VirtualClock()
    cache = SemanticCache(3, CacheConfig(), clock=clock, lookup_charge_ms=0.35)
    cache.put(_chunk("a#0", [1, 0, 0]), 0.5, Source.DIRECT, now=0.0)
    before = clock.now()
    cache.get(normalize(np.array([1.0, 0.0, 0.0])), 1, 0.4, now=0.0)
    assert (clock.now() - before) * 1000.0 == pytest.approx(0.35, rel=1e-9)
    assert cache.stats().total_get_latency_ms == pytest.approx(0.35, rel=1e-9)
    cache.get(normalize(np.array([1.0, 0.0, 0.0])), 1, 0.4, now=0.0)
    assert cache.stats().total_get_latency_ms == pytest.approx(0.70, rel=1e-9)


# --- spec properties ------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, len(VOCAB) - 1), st.integers(1, 5))
def test_put_then_get_same_embedding_always_hits(vec_idx, k):
    cache = _cache()
    chunk = DocumentChunk("x#0", "x", "x", V32[vec_idx])
    cache.put(chunk, 0.5, Source.MISS_FALLBACK, now=0.0)
    got = cache.get(V32[vec_idx], k, 1.0, now=0.0)
    assert got and got[0][0].chunk.chunk_id == "x#0"


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(0, len(VOCAB) - 1), min_size=0, max_size=8),
    st.integers(0, len(VOCAB) - 1),
)
def test_threshold_monotonicity(entry_idxs, query_idx):
    cache = _cache(max_size=50)
    for n, idx in enumerate(entry_idxs):
        cache.put(DocumentChunk(f"c#{n}", "c", f"t{n}", V32[idx]), 0.5, Source.DIRECT, now=float(n))
    query = V32[query_idx]
    results = {tau: cache.get(query, 8, tau, now=100.0) for tau in (0.05, 0.42, 0.61, 0.87)}
    taus = sorted(results)
    for lo, hi in zip(taus, taus[1:]):
        lo_ids = [e.chunk.chunk_id for e, _ in results[lo]]
        hi_ids = [e.chunk.chunk_id for e, _ in results[hi]]
        assert hi_ids == lo_ids[: len(hi_ids)]


# --- shadow model -----------------------------------------------------------------


class _Model:
    """Independent float64 restatement of the cache lifecycle rules."""

    def __init__(self, max_size, ttl, dedup):
        self.max_size, self.ttl, self.dedup = max_size, ttl, dedup
        self.entries = []
        self.seq = 0
        self.counters = dict(puts=0, hits=0, misses=0, dedup_updates=0,
                             evictions_lru=0, evictions_ttl=0)

    def put(self, cid, text, vec_idx, score, now):
        self.counters["puts"] += 1
        if self.entries:
            sims = [float(np.dot(V64[vec_idx], e["v64"])) for e in self.entries]
            best = max(range(len(sims)), key=lambda i: (sims[i], -i))
            if sims[best] > self.dedup:
                e = self.entries[best]
                e.update(cid=cid, text=text, vec_idx=vec_idx,
                         score=max(e["score"], score), expires=now + self.ttl)
                self.counters["dedup_updates"] += 1
                return "dedup_updated"
        outcome = "inserted"
        if len(self.entries) >= self.max_size:
            victim = min(self.entries, key=lambda e: (e["last_access"], e["seq"]))
            self.entries.remove(victim)
            self.counters["evictions_lru"] += 1
            outcome = "evicted_then_inserted"
        self.entries.append(dict(cid=cid, text=text, vec_idx=vec_idx, v64=V64[vec_idx],
                                 score=score, inserted=now, expires=now + self.ttl,
                                 last_access=now, seq=self.seq))
        self.seq += 1
        return outcome

    def get(self, query_idx, k, tau, now):
        scored = [
            (e, float(np.dot(V64[query_idx], e["v64"])))
            for e in self.entries
            if e["expires"] > now
        ]
        # Same epsilon the implementation applies at the threshold.
        scored = [t for t in scored if t[1] >= tau - 1e-6]
        scored.sort(key=lambda t: (-t[1], t[0]["seq"]))
        picked = scored[:k]
        for e, _ in picked:
            e["last_access"] = now
        self.counters["hits" if picked else "misses"] += 1
        return picked

    def evict_expired(self, now):
        doomed = [e for e in self.entries if e["expires"] <= now]
        self.entries = [e for e in self.entries if e["expires"] > now]
        self.counters["evictions_ttl"] += len(doomed)
        return len(doomed)

    def clear(self):
        self.entries = []


_OP = st.one_of(
    st.tuples(st.just("put"), st.integers(0, len(VOCAB) - 1),
              st.floats(0.0, 1.0, allow_nan=False), st.integers(0, 3)),
    st.tuples(st.just("get"), st.integers(0, len(VOCAB) - 1),
              st.integers(1, 4), st.integers(0, len(TAUS) - 1), st.integers(0, 3)),
    st.tuples(st.just("evict"), st.integers(0, 3)),
    st.tuples(st.just("clear"),),
)


@settings(max_examples=120, deadline=None)
@given(st.lists(_OP, min_size=1, max_size=50))
def test_model_equivalence_over_random_operation_sequences(ops):
    cfg = CacheConfig(max_size=3, ttl_seconds=5.0, similarity_threshold=0.05,
                      dedup_threshold=0.95)
    cache = SemanticCache(3, cfg, lookup_charge_ms=0.0)
    model = _Model(3, 5.0, 0.95)
    now = 0.0
    for n, op in enumerate(ops):
        if op[0] == "put":
            _, vec_idx, score, dt = op
            now += dt
            chunk = DocumentChunk(f"c#{n}", "c", f"text{n}", V32[vec_idx])
            got = cache.put(chunk, score, Source.DIRECT, now=now).value
            want = model.put(f"c#{n}", f"text{n}", vec_idx, score, now)
            assert got == want
        elif op[0] == "get":
            _, query_idx, k, tau_idx, dt = op
            now += dt
            got = cache.get(V32[query_idx], k, TAUS[tau_idx], now=now)
            want = model.get(query_idx, k, TAUS[tau_idx], now)
            assert [e.chunk.chunk_id for e, _ in got] == [e["cid"] for e, _ in want]
            assert [e.chunk.text for e, _ in got] == [e["text"] for e, _ in want]
            for (_, sim), (_, msim) in zip(got, want):
                assert sim == pytest.approx(msim, abs=1e-5)
        elif op[0] == "evict":
            now += op[1]
            assert cache.evict_expired(now=now) == model.evict_expired(now)
        else:
            cache.clear()
            model.clear()
        assert cache.size == len(model.entries)
        assert cache.size <= cfg.max_size
    s = cache.stats()
    got_counters = dict(puts=s.puts, hits=s.hits, misses=s.misses,
                        dedup_updates=s.dedup_updates,
                        evictions_lru=s.evictions_lru, evictions_ttl=s.evictions_ttl)
    assert got_counters == model.counters
    for f in dataclasses.fields(CacheStats):
        assert getattr(s, f.name) >= 0
