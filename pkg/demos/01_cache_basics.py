"""Semantic cache walkthrough: similarity lookup, TTL, LRU, and dedup.

The cache stores document chunks under the embedding of the chunk text and
answers queries by cosine similarity against everything it holds, so a
paraphrased question can hit an entry that an exact-match cache would miss.
Run with ``python3 demos/01_cache_basics.py``.
"""

from memrouter.clock import VirtualClock
from memrouter.embedding import EmbedderConfig, embed_text
from memrouter.semantic_cache import CacheConfig, SemanticCache, Source
from memrouter.vector_store import DocumentChunk

CFG = EmbedderConfig(dimension=256)


def emb(text):
    return embed_text(text, CFG)


def chunk(cid, text):
    return DocumentChunk(cid, cid.split("#")[0], text, emb(text))


def show(label, found):
    if not found:
        print(f"  {label}: miss")
        return
    entry, sim = found[0]
    print(f"  {label}: hit {entry.chunk.chunk_id} (cosine {sim:.3f})")


def main():
    clock = VirtualClock()
    cache = SemanticCache(
        256,
        CacheConfig(max_size=3, ttl_seconds=300.0, similarity_threshold=0.40),
        clock=clock,
    )

    print("== similarity lookup ==")
    billing = chunk("billing#0", "invoices are issued monthly and each invoice has a pdf")
    cache.put(billing, 0.9, Source.DIRECT)
    show("exact wording", cache.get(emb("invoices are issued monthly and each invoice has a pdf"), k=1))
    show("paraphrase   ", cache.get(emb("does each monthly invoice come as a pdf"), k=1))
    show("off topic    ", cache.get(emb("rotate the webhook signing secret"), k=1))

    print("\n== ttl: entries expire 300s after insert ==")
    clock.charge(299.0)
    show("at +299s", cache.get(billing.embedding, k=1))
    clock.charge(2.0)
    show("at +301s", cache.get(billing.embedding, k=1))
    print(f"  evict_expired() removed {cache.evict_expired()} entry")

    print("\n== lru: a full cache evicts the least recently used entry ==")
    texts = {
        "plans#0": "the starter plan supports three projects",
        "quota#0": "api rate limits reset every sixty seconds",
        "sso#0": "single sign on is available on the business tier",
    }
    for cid, text in texts.items():
        cache.put(chunk(cid, text), 0.8, Source.PREDICTION)
    clock.charge(1.0)
    cache.get(emb(texts["plans#0"]), k=1)  # touch plans#0
    clock.charge(1.0)
    cache.get(emb(texts["sso#0"]), k=1)  # touch sso#0, quota#0 is now stalest
    cache.put(chunk("audit#0", "the audit log records every admin action"), 0.8, Source.PRIORITY)
    show("evicted quota#0", cache.get(emb(texts["quota#0"]), k=1))
    show("kept plans#0   ", cache.get(emb(texts["plans#0"]), k=1))

    print("\n== dedup: near-identical re-puts refresh instead of growing ==")
    before = cache.size
    outcome = cache.put(chunk("audit#1", "the audit log records every admin action"), 0.9, Source.DIRECT)
    print(f"  re-put outcome: {outcome.value}, size {before} -> {cache.size}")

    stats = cache.stats()
    print(f"\nfinal stats: size={stats.size} hits={stats.hits} misses={stats.misses} "
          f"lru_evictions={stats.evictions_lru} dedup_updates={stats.dedup_updates}")


if __name__ == "__main__":
    main()
