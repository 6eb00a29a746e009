"""Corpus ingestion: load documents, chunk them, embed, index, and search.

Walks the packaged knowledge base through each stage by hand, then shows the
one-call helper that the benchmark and CLI use, plus the latency-injected
wrapper that simulates a remote vector database on a virtual timeline.
Run with ``python3 demos/02_ingest_and_search.py``.
"""

import asyncio

from memrouter.benchmark import default_kb_dir, ingest_corpus
from memrouter.chunker import ChunkerConfig, load_corpus, split_corpus
from memrouter.clock import VirtualClock
from memrouter.embedding import DeterministicEmbedder, EmbedderConfig
from memrouter.memory_router import RouterConfig
from memrouter.vector_store import (
    DocumentChunk,
    InMemoryVectorStore,
    LatencyInjectedStore,
    LatencyModel,
)


async def main():
    kb = default_kb_dir()
    docs = load_corpus(kb)
    print(f"loaded {len(docs)} documents from {kb}")

    chunks = split_corpus(docs, ChunkerConfig())
    print(f"split into {len(chunks)} chunks; first chunk of each doc:")
    seen = set()
    for c in chunks:
        if c.doc_id not in seen:
            seen.add(c.doc_id)
            print(f"  {c.chunk_id:<14} {c.text[:60]}...")

    embedder = DeterministicEmbedder(EmbedderConfig(dimension=256))
    embedded = [
        DocumentChunk(c.chunk_id, c.doc_id, c.text, await embedder.embed(c.text))
        for c in chunks
    ]
    store = InMemoryVectorStore(256)
    await store.upsert(embedded)
    print(f"\nindexed {store.size} chunks at dimension {store.dimension}")

    for query in (
        "rotating the signing secret invalidates the old secret",
        "refund granted in full within thirty days",
    ):
        results = await store.search(await embedder.embed(query), k=3)
        print(f"\ntop 3 for: {query}")
        for r in results:
            print(f"  {r.score:.3f}  {r.chunk.chunk_id:<14} {r.chunk.text[:56]}...")

    # The same pipeline in one call, as the benchmark and CLI run it.
    store2, count = await ingest_corpus(kb, RouterConfig())
    print(f"\ningest_corpus rebuilt the index in one call: {count} chunks")

    # Simulated remote store: seeded uniform delays on a virtual clock, so
    # "network" time is deterministic and costs no real waiting.
    clock = VirtualClock()
    remote_ish = LatencyInjectedStore(store2, LatencyModel("uniform", 97.0, 307.0, seed=0), clock)
    results = await remote_ish.search(await embedder.embed("webhook retries"), k=1)
    print(f"injected round trip: {results[0].latency_ms:.1f}ms "
          f"(virtual; wall time is microseconds)")


if __name__ == "__main__":
    asyncio.run(main())
