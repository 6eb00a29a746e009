"""Session orchestration: wires both agents to one store and one clock.

A session owns a conversation stream, a semantic cache, a foreground
Fast Talker, and a background Slow Thinker task.  ``user_turn`` drives
exactly one turn: publish the utterance, answer it in the foreground,
then let simulated (or real) time pass until the next turn, during
which the background agent does its prefetching.  Expired cache entries
are swept once per turn.

Sessions built on a virtual clock with seeded latency and a scripted
predictor replay bit-for-bit: every timestamp, latency, and cache
mutation is a pure function of the configuration and the turn script.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import MISSING, dataclass, field, fields, is_dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    tomllib = None

from .chunker import ChunkerConfig
from .clock import Clock, RealClock, VirtualClock
from .conversation_stream import ConversationEvent, ConversationStream, EventKind
from .embedding import DeterministicEmbedder, Embedder, EmbedderConfig, RemoteEmbedder
from .errors import BusClosed, ConfigInvalid, EmptyQuery
from .fast_talker import FastTalker, FastTalkerConfig, Responder, RetrievalOutcome
from .predictor import KeywordPredictor, LlmPredictor, Predictor, ScriptedPredictor
from .semantic_cache import CacheConfig, CacheStats, SemanticCache
from .slow_thinker import PrefetchReport, SlowThinker, SlowThinkerConfig
from .vector_store import LatencyModel, VectorStore


@dataclass
class RouterConfig:
    cache: CacheConfig = field(default_factory=CacheConfig)
    fast: FastTalkerConfig = field(default_factory=FastTalkerConfig)
    slow: SlowThinkerConfig = field(default_factory=SlowThinkerConfig)
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    latency: LatencyModel = field(default_factory=LatencyModel)
    clock: str = "virtual"
    chunker: ChunkerConfig = field(default_factory=ChunkerConfig)
    window_capacity: int = 10
    # Modeled CPU cost of one cache lookup, charged to virtual clocks so
    # hit latency and speedup stay well defined under simulation.
    lookup_charge_ms: float = 0.35

    def __post_init__(self):
        if self.clock not in ("real", "virtual"):
            raise ValueError(f"clock must be 'real' or 'virtual', got {self.clock!r}")
        if self.window_capacity < 1:
            raise ValueError("window_capacity must be >= 1")
        if self.lookup_charge_ms < 0:
            raise ValueError("lookup_charge_ms must be >= 0")


_SECTIONS = {
    "cache": CacheConfig,
    "fast": FastTalkerConfig,
    "slow": SlowThinkerConfig,
    "embedder": EmbedderConfig,
    "latency": LatencyModel,
    "chunker": ChunkerConfig,
}


def _build_section(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{where}: expected a table, got {type(data).__name__}")
    kwargs = dict(data)
    for f in fields(cls):
        if f.name in kwargs and isinstance(kwargs[f.name], dict):
            nested = f.default_factory if f.default_factory is not MISSING else None
            if nested is not None and is_dataclass(nested):
                kwargs[f.name] = _build_section(nested, kwargs[f.name], f"{where}.{f.name}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{where}: {exc}") from exc


def config_from_dict(data: dict) -> RouterConfig:
    """Build a RouterConfig from parsed file contents.

    Unknown keys fail loudly rather than being silently dropped; a typo
    in a tuning knob must not produce a subtly different benchmark.
    """
    if not isinstance(data, dict):
        raise ConfigInvalid("config root must be a table")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        elif key in ("clock", "window_capacity", "lookup_charge_ms"):
            kwargs[key] = value
        else:
            raise ConfigInvalid(f"unknown config key {key!r}")
    try:
        return RouterConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from exc


def load_config(path: str | Path) -> RouterConfig:
    """Read a JSON or TOML config file mirroring RouterConfig."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        if tomllib is None:
            raise ConfigInvalid("TOML configs need Python 3.11+; use JSON on this interpreter")
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from exc
    else:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from exc
    return config_from_dict(data)


@dataclass
class TurnResult:
    turn_index: int
    outcome: RetrievalOutcome
    response: str
    cache_size_after: int
    prefetch_report: PrefetchReport | None = None


def _make_clock(cfg: RouterConfig) -> Clock:
    return VirtualClock() if cfg.clock == "virtual" else RealClock()


def _make_embedder(cfg: EmbedderConfig) -> Embedder:
    if cfg.endpoint:
        return RemoteEmbedder(cfg)
    return DeterministicEmbedder(cfg)


def _make_predictor(cfg: SlowThinkerConfig) -> Predictor:
    strategy = cfg.predictor.strategy
    if strategy == "keyword":
        return KeywordPredictor(cfg.predictor)
    if strategy == "llm":
        return LlmPredictor(cfg.predictor)
    # An empty script predicts nothing; benchmarks inject their own.
    return ScriptedPredictor([], cfg.predictor)


class MemorySession:
    """Live session handle returned by :func:`start_session`."""

    def __init__(
        self,
        cfg: RouterConfig,
        store: VectorStore,
        clock: Clock,
        embedder: Embedder,
        cache: SemanticCache,
        stream: ConversationStream,
        fast: FastTalker,
        slow: SlowThinker,
        task: asyncio.Task,
    ):
        self.cfg = cfg
        self.store = store
        self.clock = clock
        self.embedder = embedder
        self.cache = cache
        self.stream = stream
        self.fast = fast
        self.slow = slow
        self._task = task
        self._turns = 0
        self._final_stats: CacheStats | None = None

    @property
    def closed(self) -> bool:
        return self._final_stats is not None


async def start_session(
    cfg: RouterConfig,
    store: VectorStore,
    *,
    clock: Clock | None = None,
    predictor: Predictor | None = None,
    responder: Responder | None = None,
    embedder: Embedder | None = None,
) -> MemorySession:
    """Open a fresh session against an already ingested store.

    Sessions never share mutable state: each gets its own cache, stream,
    and background task, so two sessions over one store are independent.
    """
    clock = clock or _make_clock(cfg)
    embedder = embedder or _make_embedder(cfg.embedder)
    if store.dimension != embedder.dimension:
        raise ConfigInvalid(
            f"store dimension {store.dimension} != embedder dimension {embedder.dimension}"
        )
    cache = SemanticCache(
        embedder.dimension, cfg.cache, clock=clock, lookup_charge_ms=cfg.lookup_charge_ms
    )
    stream = ConversationStream(window_capacity=cfg.window_capacity)
    fast = FastTalker(cache, store, embedder, stream, cfg=cfg.fast, clock=clock, responder=responder)
    slow = SlowThinker(
        cache,
        store,
        embedder,
        stream,
        cfg=cfg.slow,
        clock=clock,
        predictor=predictor or _make_predictor(cfg.slow),
    )
    task = asyncio.create_task(slow.run(stream.subscribe()))
    return MemorySession(cfg, store, clock, embedder, cache, stream, fast, slow, task)


async def user_turn(
    session: MemorySession, text: str, inter_turn_delay_s: float = 0.0
) -> TurnResult:
    """Run one conversational turn end to end.

    The foreground answer path never blocks on background work; the
    Slow Thinker catches up during the inter-turn delay, which a virtual
    clock compresses to nothing.
    """
    if session.closed:
        raise BusClosed("session is shut down")
    if not text.strip():
        raise EmptyQuery("query text is empty")
    if inter_turn_delay_s < 0:
        raise ValueError("inter_turn_delay_s must be >= 0")
    clock = session.clock
    turn = session._turns
    session._turns += 1
    session.stream.publish(
        ConversationEvent(
            kind=EventKind.USER_UTTERANCE, turn_index=turn, text=text, timestamp=clock.now()
        )
    )
    outcome, response = await session.fast.handle_query(text, turn_index=turn)
    session.stream.publish(
        ConversationEvent(
            kind=EventKind.AGENT_RESPONSE, turn_index=turn, text=response, timestamp=clock.now()
        )
    )
    await clock.sleep(inter_turn_delay_s)
    session.cache.evict_expired(now=clock.now())
    return TurnResult(
        turn_index=turn,
        outcome=outcome,
        response=response,
        cache_size_after=session.cache.stats().size,
        prefetch_report=session.slow.reports.get(turn),
    )


async def shutdown(session: MemorySession) -> CacheStats:
    """Close the stream, drain the background agent, return final stats."""
    if session._final_stats is not None:
        return session._final_stats
    session.stream.close()
    await session._task
    session._final_stats = session.cache.stats()
    return session._final_stats
