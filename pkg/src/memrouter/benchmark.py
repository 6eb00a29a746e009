"""Benchmark harness: scripted scenarios, paired runs, report rendering.

A scenario is a fixed 20-turn conversation script.  Each scenario runs
in two modes against the same corpus and the same seeded latency model:

* ``baseline`` answers every turn straight from the vector store, no
  cache and no background agent; every turn is a miss by definition.
* ``dual`` runs the full router (cache, Fast Talker, Slow Thinker).

Records from both modes pair up by (scenario_id, turn_index), which is
what makes "time saved" well defined: for every dual-mode cache hit we
know exactly what the store round trip would have cost on that turn.

Everything is virtual-clock by default, so a full paired suite replays
byte-identically for a given master seed.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import statistics
from dataclasses import asdict, dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources
from pathlib import Path

from .chunker import load_corpus, split_corpus
from .clock import VirtualClock
from .embedding import DeterministicEmbedder, Embedder, EmbedderConfig
from .errors import ConfigInvalid, UnpairedRecords
from .fast_talker import RetrievalSource, TemplateResponder
from .memory_router import RouterConfig, shutdown, start_session, user_turn
from .predictor import ScriptedPredictor
from .vector_store import (
    DocumentChunk,
    InMemoryVectorStore,
    LatencyInjectedStore,
    VectorStore,
)

BASELINE = "baseline"
DUAL = "dual"

MIN_DELAY_S = 3.0
MAX_DELAY_S = 7.0


@dataclass(frozen=True)
class ScenarioTurn:
    query: str
    topic_labels: tuple[str, ...] = ()
    delay_s: float = 5.0

    def __post_init__(self):
        if not self.query.strip():
            raise ValueError("turn query must be non-empty")
        if not MIN_DELAY_S <= self.delay_s <= MAX_DELAY_S:
            raise ValueError(f"delay_s must be within [{MIN_DELAY_S}, {MAX_DELAY_S}]")
        object.__setattr__(self, "topic_labels", tuple(self.topic_labels))


@dataclass
class Scenario:
    scenario_id: str
    turns: list[ScenarioTurn]

    def __post_init__(self):
        if not self.scenario_id:
            raise ValueError("scenario_id must be non-empty")
        if not self.turns:
            raise ValueError("a scenario needs at least one turn")

    def labels_by_turn(self) -> list[list[str]]:
        return [list(turn.topic_labels) for turn in self.turns]


@dataclass(frozen=True)
class TurnRecord:
    scenario_id: str
    turn_index: int
    mode: str
    hit: bool
    retrieval_latency_ms: float
    embed_latency_ms: float
    cache_size: int


@dataclass
class BucketRow:
    label: str
    turns: int
    hits: int
    hit_rate: float


@dataclass
class ScenarioRow:
    scenario_id: str
    turns: int
    hits: int
    hit_rate: float
    saved_ms: float


@dataclass
class BenchmarkReport:
    overall_hit_rate: float
    warm_hit_rate: float
    mean_store_latency_ms: float
    mean_cache_hit_latency_ms: float
    speedup: float | None
    total_saved_ms: float
    per_scenario: list[ScenarioRow]
    per_turn_bucket: list[BucketRow]
    records: list[TurnRecord]
    sweep: list[tuple[float, float]] | None = None


def default_config() -> RouterConfig:
    """Benchmark defaults: virtual clock, seeded uniform(97, 307) store
    latency, 1536-dimensional embeddings."""
    return RouterConfig(embedder=EmbedderConfig(dimension=1536))


def data_path(*parts: str) -> Path:
    """Path to a packaged data file or directory."""
    return Path(resources.files("memrouter").joinpath("data", *parts))


def default_kb_dir() -> Path:
    return data_path("kb")


def default_scenario_dir() -> Path:
    return data_path("scenarios")


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    if not isinstance(data, dict) or "turns" not in data:
        raise ConfigInvalid(f"{path}: expected an object with a 'turns' array")
    try:
        turns = [
            ScenarioTurn(
                query=t["query"],
                topic_labels=tuple(t.get("topic_labels", ())),
                delay_s=float(t.get("delay_s", 5.0)),
            )
            for t in data["turns"]
        ]
        return Scenario(scenario_id=data.get("scenario_id", path.stem), turns=turns)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc


def load_scenarios(path: str | Path) -> list[Scenario]:
    """One scenario from a file, or all *.json scenarios from a directory."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.json"))
        if not files:
            raise ConfigInvalid(f"{path}: no scenario files found")
        return [load_scenario(f) for f in files]
    return [load_scenario(path)]


async def ingest_corpus(
    kb_dir: str | Path,
    cfg: RouterConfig,
    *,
    embedder: Embedder | None = None,
    store: VectorStore | None = None,
) -> tuple[VectorStore, int]:
    """Chunk and embed every document under kb_dir into a store."""
    embedder = embedder or DeterministicEmbedder(cfg.embedder)
    store = store if store is not None else InMemoryVectorStore(embedder.dimension)
    docs = load_corpus(kb_dir)
    chunks = split_corpus(docs, cfg.chunker)
    embedded = [
        DocumentChunk(c.chunk_id, c.doc_id, c.text, await embedder.embed(c.text))
        for c in chunks
    ]
    await store.upsert(embedded)
    return store, len(embedded)


def _scenario_seed(master_seed: int, scenario_id: str) -> int:
    """Per-scenario latency seed, identical across modes so paired runs
    draw from the same delay stream."""
    digest = hashlib.blake2b(
        f"{master_seed}\x1f{scenario_id}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def _wrap_store(base: VectorStore, cfg: RouterConfig, clock, seed: int) -> VectorStore:
    if cfg.latency.kind == "none":
        return base
    return LatencyInjectedStore(base, replace(cfg.latency, seed=seed), clock=clock)


async def _run_baseline(scenario: Scenario, cfg: RouterConfig, store, master_seed: int):
    clock = VirtualClock()
    embedder = DeterministicEmbedder(cfg.embedder)
    wrapped = _wrap_store(store, cfg, clock, _scenario_seed(master_seed, scenario.scenario_id))
    responder = TemplateResponder()
    records = []
    for i, turn in enumerate(scenario.turns):
        t0 = clock.now()
        query = await embedder.embed(turn.query)
        embed_ms = (clock.now() - t0) * 1000.0
        t1 = clock.now()
        results = await wrapped.search(query, cfg.fast.k)
        store_ms = (clock.now() - t1) * 1000.0
        shown = [(r.chunk, r.score) for r in results][: cfg.fast.max_context_chunks]
        await responder.respond(turn.query, "", shown)
        records.append(
            TurnRecord(
                scenario_id=scenario.scenario_id,
                turn_index=i,
                mode=BASELINE,
                hit=False,
                retrieval_latency_ms=store_ms,
                embed_latency_ms=embed_ms,
                cache_size=0,
            )
        )
        await clock.sleep(turn.delay_s)
    return records


async def _run_dual(scenario: Scenario, cfg: RouterConfig, store, master_seed: int):
    clock = VirtualClock()
    wrapped = _wrap_store(store, cfg, clock, _scenario_seed(master_seed, scenario.scenario_id))
    session = await start_session(
        cfg, wrapped, clock=clock,
        predictor=ScriptedPredictor(scenario.labels_by_turn(), cfg.slow.predictor),
    )
    records = []
    try:
        for i, turn in enumerate(scenario.turns):
            result = await user_turn(session, turn.query, turn.delay_s)
            records.append(
                TurnRecord(
                    scenario_id=scenario.scenario_id,
                    turn_index=i,
                    mode=DUAL,
                    hit=result.outcome.source is RetrievalSource.CACHE_HIT,
                    retrieval_latency_ms=result.outcome.retrieval_latency_ms,
                    embed_latency_ms=result.outcome.embed_latency_ms,
                    cache_size=result.cache_size_after,
                )
            )
    finally:
        await shutdown(session)
    return records


async def run_scenario(
    scenario: Scenario,
    mode: str,
    cfg: RouterConfig,
    store: VectorStore,
    master_seed: int = 0,
) -> list[TurnRecord]:
    """Run one scenario in one mode; exactly one record per turn."""
    if mode == BASELINE:
        return await _run_baseline(scenario, cfg, store, master_seed)
    if mode == DUAL:
        return await _run_dual(scenario, cfg, store, master_seed)
    raise ValueError(f"unknown mode {mode!r}")


async def run_suite(
    scenarios: list[Scenario],
    mode: str,
    cfg: RouterConfig,
    store: VectorStore,
    master_seed: int = 0,
) -> list[TurnRecord]:
    """Run every scenario; mode 'paired' runs baseline then dual."""
    records: list[TurnRecord] = []
    modes = (BASELINE, DUAL) if mode == "paired" else (mode,)
    for m in modes:
        for scenario in scenarios:
            records.extend(await run_scenario(scenario, m, cfg, store, master_seed))
    return records


def aggregate(
    records: list[TurnRecord], sweep: list[tuple[float, float]] | None = None
) -> BenchmarkReport:
    """Fold paired records into a report; fails on incomplete pairing."""
    baseline: dict[tuple[str, int], TurnRecord] = {}
    dual: dict[tuple[str, int], TurnRecord] = {}
    for rec in records:
        bucket = baseline if rec.mode == BASELINE else dual if rec.mode == DUAL else None
        if bucket is None:
            raise UnpairedRecords(f"unknown mode {rec.mode!r}")
        key = (rec.scenario_id, rec.turn_index)
        if key in bucket:
            raise UnpairedRecords(f"duplicate {rec.mode} record for {key}")
        bucket[key] = rec
    if not dual:
        raise UnpairedRecords("no dual-mode records to aggregate")
    if baseline.keys() != dual.keys():
        missing = baseline.keys() ^ dual.keys()
        raise UnpairedRecords(f"baseline/dual records do not pair up, e.g. {sorted(missing)[:3]}")

    total = len(dual)
    hits = [rec for rec in dual.values() if rec.hit]
    scenarios = sorted({sid for sid, _ in dual})
    overall = len(hits) / total
    warm_denominator = total - len(scenarios)
    warm = len(hits) / warm_denominator if warm_denominator > 0 else 0.0
    mean_store = statistics.fmean(rec.retrieval_latency_ms for rec in baseline.values())
    mean_cache_hit = (
        statistics.fmean(rec.retrieval_latency_ms for rec in hits) if hits else 0.0
    )
    speedup = mean_store / mean_cache_hit if hits and mean_cache_hit > 0 else None
    saved = sum(
        baseline[(rec.scenario_id, rec.turn_index)].retrieval_latency_ms
        - rec.retrieval_latency_ms
        for rec in hits
    )

    per_scenario = []
    for sid in scenarios:
        recs = [rec for key, rec in dual.items() if key[0] == sid]
        scenario_hits = [rec for rec in recs if rec.hit]
        scenario_saved = sum(
            baseline[(rec.scenario_id, rec.turn_index)].retrieval_latency_ms
            - rec.retrieval_latency_ms
            for rec in scenario_hits
        )
        per_scenario.append(
            ScenarioRow(
                scenario_id=sid,
                turns=len(recs),
                hits=len(scenario_hits),
                hit_rate=len(scenario_hits) / len(recs),
                saved_ms=scenario_saved,
            )
        )

    buckets = []
    max_turn = max(turn for _, turn in dual)
    for b in range(max_turn // 5 + 1):
        lo, hi = 5 * b, 5 * b + 4
        recs = [rec for (_, turn), rec in dual.items() if lo <= turn <= hi]
        if not recs:
            continue
        bucket_hits = sum(1 for rec in recs if rec.hit)
        buckets.append(
            BucketRow(
                label=f"{lo + 1}-{hi + 1}",
                turns=len(recs),
                hits=bucket_hits,
                hit_rate=bucket_hits / len(recs),
            )
        )

    ordered = sorted(records, key=lambda r: (r.mode, r.scenario_id, r.turn_index))
    return BenchmarkReport(
        overall_hit_rate=overall,
        warm_hit_rate=warm,
        mean_store_latency_ms=mean_store,
        mean_cache_hit_latency_ms=mean_cache_hit,
        speedup=speedup,
        total_saved_ms=saved,
        per_scenario=per_scenario,
        per_turn_bucket=buckets,
        records=ordered,
        sweep=list(sweep) if sweep is not None else None,
    )


async def sweep_threshold(
    taus: list[float],
    cfg: RouterConfig,
    scenarios: list[Scenario],
    store: VectorStore,
    master_seed: int = 0,
) -> list[tuple[float, float]]:
    """Dual-mode hit rate per similarity threshold, identical seeds."""
    for tau in taus:
        if not 0.0 <= tau <= 1.0:
            raise ConfigInvalid(f"threshold {tau} outside [0, 1]")
    rows = []
    for tau in taus:
        try:
            tuned = replace(cfg, cache=replace(cfg.cache, similarity_threshold=tau))
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc
        records = await run_suite(scenarios, DUAL, tuned, store, master_seed)
        rows.append((tau, sum(1 for r in records if r.hit) / len(records)))
    return rows


def render_speedup(speedup: float | None) -> str:
    if speedup is None:
        return "n/a"
    return f"{int(Decimal(repr(speedup)).quantize(Decimal('1'), rounding=ROUND_HALF_UP))}x"


def _pct(rate: float) -> str:
    return f"{rate * 100:.0f}%"


def render_report(report: BenchmarkReport, fmt: str = "text") -> str:
    if fmt == "machine":
        return _render_machine(report)
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    return _render_text(report)


def _render_machine(report: BenchmarkReport) -> str:
    payload = {
        "aggregates": {
            "overall_hit_rate": report.overall_hit_rate,
            "warm_hit_rate": report.warm_hit_rate,
            "mean_store_latency_ms": report.mean_store_latency_ms,
            "mean_cache_hit_latency_ms": report.mean_cache_hit_latency_ms,
            "speedup": report.speedup,
            "total_saved_ms": report.total_saved_ms,
            "per_scenario": [asdict(row) for row in report.per_scenario],
            "per_turn_bucket": [asdict(row) for row in report.per_turn_bucket],
        },
        "records": [asdict(rec) for rec in report.records],
        "sweep": report.sweep,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def report_from_json(text: str) -> BenchmarkReport:
    """Rebuild a report from its machine rendering by re-aggregating."""
    try:
        payload = json.loads(text)
        records = [TurnRecord(**rec) for rec in payload["records"]]
        sweep = payload.get("sweep")
        if sweep is not None:
            sweep = [(float(tau), float(rate)) for tau, rate in sweep]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigInvalid(f"not a machine-format report: {exc}") from exc
    return aggregate(records, sweep=sweep)


def _render_text(report: BenchmarkReport) -> str:
    dual = [rec for rec in report.records if rec.mode == DUAL]
    base = [rec for rec in report.records if rec.mode == BASELINE]
    hit_lat = [rec.retrieval_latency_ms for rec in dual if rec.hit]
    store_lat = [rec.retrieval_latency_ms for rec in base]
    lines = []
    lines.append("== Summary ==")
    lines.append(f"scenarios:                {len(report.per_scenario)}")
    lines.append(f"turns per mode:           {len(dual)}")
    lines.append(f"overall hit rate:         {_pct(report.overall_hit_rate)}")
    lines.append(f"warm hit rate:            {_pct(report.warm_hit_rate)}")
    lines.append(f"mean store latency:       {report.mean_store_latency_ms:.1f} ms")
    lines.append(f"mean cache hit latency:   {report.mean_cache_hit_latency_ms:.2f} ms")
    lines.append(f"speedup:                  {render_speedup(report.speedup)}")
    lines.append(f"total time saved:         {report.total_saved_ms:.1f} ms")
    lines.append("")
    lines.append("== Latency (ms) ==")
    for name, values in (("store round trip", store_lat), ("cache hit", hit_lat)):
        if values:
            arr = sorted(values)
            p50 = statistics.median(arr)
            p95 = arr[min(len(arr) - 1, int(0.95 * len(arr)))]
            lines.append(
                f"{name:<18} mean {statistics.fmean(arr):8.2f}   p50 {p50:8.2f}   p95 {p95:8.2f}"
            )
        else:
            lines.append(f"{name:<18} (no samples)")
    lines.append("")
    lines.append("== Per scenario ==")
    lines.append(f"{'scenario':<24} {'turns':>5} {'hits':>5} {'rate':>6} {'saved ms':>10}")
    for row in report.per_scenario:
        lines.append(
            f"{row.scenario_id:<24} {row.turns:>5} {row.hits:>5} "
            f"{_pct(row.hit_rate):>6} {row.saved_ms:>10.1f}"
        )
    lines.append("")
    lines.append("== By turn position ==")
    lines.append(f"{'turns':<8} {'n':>5} {'hits':>5} {'rate':>6}")
    for row in report.per_turn_bucket:
        lines.append(f"{row.label:<8} {row.turns:>5} {row.hits:>5} {_pct(row.hit_rate):>6}")
    if report.sweep is not None:
        lines.append("")
        lines.append("== Threshold sweep ==")
        lines.append(f"{'tau':<6} {'hit rate':>9}")
        for tau, rate in report.sweep:
            lines.append(f"{tau:<6.2f} {_pct(rate):>9}")
    return "\n".join(lines) + "\n"
