"""Dual-agent session: a foreground answerer backed by a background prefetcher.

The fast talker serves each turn cache-first and falls back to the (slow,
simulated-remote) vector store only on a miss, caching what it fetched.
Between turns the slow thinker predicts likely next topics from the
conversation and prefetches chunks for them.  The session below shows every
beat of that design:

  turn 0  cold start: the first question always misses
  turn 1  the same question, reworded, now hits in well under a millisecond
  turn 2  a topic shift the predictor did not see: store fallback again
  turn 3  reworded follow-up on the shifted topic: hit, thanks to turn 2
  turn 4  a vague aside that matches nothing: miss, priority fetch fires
  turn 5  a question never asked before that hits anyway, prefetched by
          the background agent from the billing thread of the conversation

Everything runs on a virtual clock, so the simulated 100-300ms store round
trips and five-second pauses cost no real waiting.
Run with ``python3 demos/03_dual_agent_session.py``.
"""

import asyncio
from dataclasses import replace

from memrouter.benchmark import default_kb_dir, ingest_corpus
from memrouter.clock import VirtualClock
from memrouter.memory_router import RouterConfig, shutdown, start_session, user_turn
from memrouter.vector_store import LatencyInjectedStore

TURNS = [
    "how is the monthly invoice numbered and filed",
    "is there one invoice per billing period and where is the pdf",
    "refund granted in full within thirty days",
    "after thirty days is the refund prorated by unused whole months",
    "the vendor swears nothing changed on their side",
    "what is the prorated price when seats are added to the plan mid period",
]


async def main():
    base = RouterConfig()
    cfg = replace(base, slow=replace(base.slow,
                  predictor=replace(base.slow.predictor, strategy="keyword")))
    clock = VirtualClock()
    inner, count = await ingest_corpus(default_kb_dir(), cfg)
    store = LatencyInjectedStore(inner, cfg.latency, clock)
    print(f"knowledge base ready: {count} chunks; store latency uniform(97, 307)ms\n")

    session = await start_session(cfg, store, clock=clock)
    for text in TURNS:
        result = await user_turn(session, text, inter_turn_delay_s=5.0)
        out = result.outcome
        print(f"turn {result.turn_index}: {out.source.value:<14} "
              f"retrieval {out.retrieval_latency_ms:7.2f}ms  "
              f"cache size {result.cache_size_after:>3}")
        print(f"  q: {text}")
        if out.chunks:
            top, sim = out.chunks[0]
            print(f"  context: {top.chunk_id} (cosine {sim:.3f}) {top.text[:48]}...")
        report = result.prefetch_report
        if report is not None:
            print(f"  background: {report.predictions_made} predictions, "
                  f"{report.direct_cached + report.prefetched} chunks cached"
                  + (", rate limited" if report.rate_limited else ""))
        print()

    stats = await shutdown(session)
    print(f"session over. cache: {stats.hits} hits / {stats.hits + stats.misses} lookups, "
          f"{stats.size} entries resident")
    print(f"virtual elapsed: {clock.now():.1f}s (wall time: milliseconds)")


if __name__ == "__main__":
    asyncio.run(main())
