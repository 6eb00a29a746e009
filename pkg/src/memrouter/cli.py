"""Command line interface.

Four subcommands cover the operational surface:

* ``memrouter ingest``  chunk and embed a knowledge base directory
* ``memrouter bench``   run scenario suites (baseline, dual, or paired)
* ``memrouter sweep``   hit rate across similarity thresholds
* ``memrouter report``  re-render a saved machine-format report

Benchmarks run against an in-memory store on the virtual clock, so they
are deterministic per seed and finish in seconds of wall time.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import statistics
import sys
from dataclasses import asdict
from pathlib import Path

from .benchmark import (
    BASELINE,
    DUAL,
    aggregate,
    default_config,
    default_kb_dir,
    default_scenario_dir,
    ingest_corpus,
    load_scenarios,
    render_report,
    report_from_json,
    run_suite,
    sweep_threshold,
)
from .chunker import load_corpus
from .errors import ConfigInvalid, MemrouterError
from .memory_router import RouterConfig, load_config
from .vector_store import RemoteVectorStore


def _load_cfg(path: str | None) -> RouterConfig:
    return load_config(path) if path else default_config()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _render_single_mode(mode: str, records) -> str:
    """Minimal text summary for a one-sided (unpaired) run."""
    lines = [f"mode: {mode}", f"turns: {len(records)}"]
    if mode == DUAL:
        hits = sum(1 for rec in records if rec.hit)
        lines.append(f"hits: {hits} ({hits / len(records) * 100:.0f}%)")
    latencies = [rec.retrieval_latency_ms for rec in records]
    lines.append(f"mean retrieval latency: {statistics.fmean(latencies):.2f} ms")
    return "\n".join(lines) + "\n"


def cmd_ingest(args) -> int:
    cfg = _load_cfg(args.config)
    docs = load_corpus(args.kb)
    if args.store == "remote":
        if not args.endpoint:
            raise ConfigInvalid("--store remote requires --endpoint")
        store = RemoteVectorStore(
            args.endpoint, args.collection, cfg.embedder.dimension
        )
        target = f"{args.endpoint}/collections/{args.collection}"
    else:
        store = None
        target = "local in-memory store (dry run)"
    _, count = asyncio.run(ingest_corpus(args.kb, cfg, store=store))
    print(f"ingested {count} chunks from {len(docs)} documents into {target}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_cfg(args.config)
    scenarios = load_scenarios(args.scenarios)

    async def run():
        store, _ = await ingest_corpus(args.kb, cfg)
        return await run_suite(scenarios, args.mode, cfg, store, args.seed)

    records = asyncio.run(run())
    if args.mode == "paired":
        report = aggregate(records)
        text = render_report(report, args.format)
    elif args.format == "machine":
        text = json.dumps(
            {"records": [asdict(rec) for rec in records], "sweep": None},
            sort_keys=True,
            indent=2,
        ) + "\n"
    else:
        text = _render_single_mode(args.mode, records)
    _emit(text, args.out)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args.config)
    scenarios = load_scenarios(args.scenarios)
    try:
        taus = [float(part) for part in args.thresholds.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigInvalid(f"bad --thresholds value: {exc}") from exc
    if not taus:
        raise ConfigInvalid("--thresholds needs at least one value")

    async def run():
        store, _ = await ingest_corpus(args.kb, cfg)
        return await sweep_threshold(taus, cfg, scenarios, store, args.seed)

    rows = asyncio.run(run())
    if args.format == "machine":
        text = json.dumps({"sweep": rows}, indent=2) + "\n"
    else:
        lines = [f"{'tau':<6} {'hit rate':>9}"]
        lines += [f"{tau:<6.2f} {rate * 100:>8.0f}%" for tau, rate in rows]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def cmd_report(args) -> int:
    report = report_from_json(Path(args.infile).read_text(encoding="utf-8"))
    _emit(render_report(report, args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memrouter",
        description="dual-agent memory router: ingest, benchmark, sweep, report",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenarios=False):
        p.add_argument("--config", help="router config file (JSON, or TOML on 3.11+)")
        p.add_argument("--kb", default=str(default_kb_dir()),
                       help="knowledge base directory of .txt documents")
        if scenarios:
            p.add_argument("--scenarios", default=str(default_scenario_dir()),
                           help="scenario .json file or directory")
            p.add_argument("--seed", type=int, default=0,
                           help="master seed for the latency model")
            p.add_argument("--out", help="write output to a file instead of stdout")
            p.add_argument("--format", choices=("text", "machine"), default="text")

    p_ingest = sub.add_parser("ingest", help="chunk and embed a knowledge base")
    common(p_ingest)
    p_ingest.add_argument("--store", choices=("local", "remote"), default="local")
    p_ingest.add_argument("--endpoint", help="vector database URL for --store remote")
    p_ingest.add_argument("--collection", default="memrouter")
    p_ingest.set_defaults(fn=cmd_ingest)

    p_bench = sub.add_parser("bench", help="run a scenario suite")
    common(p_bench, scenarios=True)
    p_bench.add_argument("--mode", choices=(BASELINE, DUAL, "paired"), default="paired")
    p_bench.set_defaults(fn=cmd_bench)

    p_sweep = sub.add_parser("sweep", help="hit rate per similarity threshold")
    common(p_sweep, scenarios=True)
    p_sweep.add_argument("--thresholds", required=True,
                         help="comma-separated taus, e.g. 0.30,0.40,0.50")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_report = sub.add_parser("report", help="render a saved machine report")
    p_report.add_argument("--in", dest="infile", required=True,
                          help="machine-format report produced by bench --format machine")
    p_report.add_argument("--format", choices=("text", "machine"), default="text")
    p_report.add_argument("--out", help="write output to a file instead of stdout")
    p_report.set_defaults(fn=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MemrouterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
