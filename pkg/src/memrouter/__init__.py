"""memrouter: dual-agent memory routing for retrieval-augmented voice agents.

A foreground "fast talker" answers every turn cache-first from a semantic
cache; a background "slow thinker" prefetches chunks for predicted next
topics between turns.  The top-level names below cover typical use: open a
session against an ingested vector store, run turns, and benchmark the
paired economics.
"""

from .benchmark import (
    Scenario,
    ScenarioTurn,
    aggregate,
    default_config,
    default_kb_dir,
    default_scenario_dir,
    ingest_corpus,
    load_scenario,
    load_scenarios,
    render_report,
    report_from_json,
    run_scenario,
    run_suite,
    sweep_threshold,
)
from .chunker import ChunkerConfig, RawDocument, load_corpus, split_corpus, split_document
from .clock import Clock, RealClock, VirtualClock
from .conversation_stream import ConversationEvent, ConversationStream, EventKind
from .embedding import DeterministicEmbedder, Embedder, EmbedderConfig, RemoteEmbedder, cosine
from .errors import (
    BusClosed,
    ConfigInvalid,
    DimensionMismatch,
    EmptyQuery,
    MemrouterError,
    NetworkError,
    ProtocolError,
    UnpairedRecords,
)
from .fast_talker import FastTalker, FastTalkerConfig, RetrievalOutcome, RetrievalSource
from .memory_router import (
    MemorySession,
    RouterConfig,
    TurnResult,
    config_from_dict,
    load_config,
    shutdown,
    start_session,
    user_turn,
)
from .predictor import KeywordPredictor, LlmPredictor, Prediction, Predictor, ScriptedPredictor
from .semantic_cache import CacheConfig, CacheStats, SemanticCache, Source
from .slow_thinker import PrefetchReport, SlowThinker, SlowThinkerConfig
from .vector_store import (
    DocumentChunk,
    InMemoryVectorStore,
    LatencyInjectedStore,
    LatencyModel,
    RemoteVectorStore,
    SearchResult,
    VectorStore,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # session
    "RouterConfig", "MemorySession", "TurnResult",
    "start_session", "user_turn", "shutdown", "load_config", "config_from_dict",
    # agents
    "FastTalker", "FastTalkerConfig", "RetrievalOutcome", "RetrievalSource",
    "SlowThinker", "SlowThinkerConfig", "PrefetchReport",
    "Predictor", "ScriptedPredictor", "KeywordPredictor", "LlmPredictor", "Prediction",
    # memory
    "SemanticCache", "CacheConfig", "CacheStats", "Source",
    "VectorStore", "InMemoryVectorStore", "RemoteVectorStore",
    "LatencyInjectedStore", "LatencyModel", "DocumentChunk", "SearchResult",
    # text and vectors
    "ChunkerConfig", "RawDocument", "load_corpus", "split_corpus", "split_document",
    "Embedder", "DeterministicEmbedder", "RemoteEmbedder", "EmbedderConfig", "cosine",
    # plumbing
    "Clock", "RealClock", "VirtualClock",
    "ConversationStream", "ConversationEvent", "EventKind",
    # benchmark
    "Scenario", "ScenarioTurn", "ingest_corpus", "load_scenario", "load_scenarios",
    "run_scenario", "run_suite", "sweep_threshold", "aggregate",
    "render_report", "report_from_json", "default_config",
    "default_kb_dir", "default_scenario_dir",
    # errors
    "MemrouterError", "ConfigInvalid", "DimensionMismatch", "EmptyQuery",
    "NetworkError", "ProtocolError", "BusClosed", "UnpairedRecords",
]
