"""Similarity threshold sweep: how strict matching trades hit rate away.

The cache only answers when the best cosine similarity clears tau.  Raising
tau makes matches stricter, so the dual-agent hit rate can only fall; this
sweep runs the full suite once per tau on identical seeds to show the curve.
The same sweep is available as ``memrouter sweep --thresholds ...``.
Run with ``python3 demos/05_threshold_sweep.py``.
"""

import asyncio

from memrouter.benchmark import (
    default_config,
    default_kb_dir,
    default_scenario_dir,
    ingest_corpus,
    load_scenarios,
    sweep_threshold,
)


async def main():
    cfg = default_config()
    scenarios = load_scenarios(default_scenario_dir())
    store, _ = await ingest_corpus(default_kb_dir(), cfg)

    taus = [0.30, 0.35, 0.40, 0.45, 0.50, 0.55]
    print(f"running {len(taus)} dual-mode suite passes on identical seeds...\n")
    rows = await sweep_threshold(taus, cfg, scenarios, store, master_seed=0)

    print("  tau   hit rate")
    for tau, rate in rows:
        bar = "#" * round(rate * 40)
        print(f"  {tau:.2f}  {rate:7.3f}  {bar}")

    rates = [rate for _, rate in rows]
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    print("\nnon-increasing in tau, as the subset property of stricter matching demands")


if __name__ == "__main__":
    asyncio.run(main())
