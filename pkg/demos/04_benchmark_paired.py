"""Paired benchmark: baseline (store every turn) versus the dual-agent router.

Runs the packaged 10-scenario, 20-turn suite twice with identical seeded
store latencies: once with no cache and once with the full dual-agent stack.
Pairing the runs turn by turn is what makes "time saved" well defined.  The
same run is available from the command line as ``memrouter bench``.
Run with ``python3 demos/04_benchmark_paired.py``.
"""

import asyncio

from memrouter.benchmark import (
    aggregate,
    default_config,
    default_kb_dir,
    default_scenario_dir,
    ingest_corpus,
    load_scenarios,
    render_report,
    run_suite,
)


async def main():
    cfg = default_config()
    scenarios = load_scenarios(default_scenario_dir())
    store, count = await ingest_corpus(default_kb_dir(), cfg)
    print(f"{len(scenarios)} scenarios x {len(scenarios[0].turns)} turns "
          f"over a {count}-chunk knowledge base, dimension {cfg.embedder.dimension}\n")

    records = await run_suite(scenarios, "paired", cfg, store, master_seed=0)
    report = aggregate(records)
    print(render_report(report, "text"))

    # The machine format round-trips: save it and re-render later with
    # `memrouter report --in bench.json`.
    machine = render_report(report, "machine")
    print(f"machine format: {len(machine)} bytes of JSON, byte-stable for a fixed seed")


if __name__ == "__main__":
    asyncio.run(main())
