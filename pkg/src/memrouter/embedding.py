"""Vector math, the embedder contract, and the two embedder backends.

All similarity in this package is the inner product of L2-normalized
vectors, so a "unit vector" (a 1-D float32 numpy array with norm 1) is the
currency every other module trades in.

Two embedders share one async interface:

* :class:`DeterministicEmbedder` hashes tokens into a signed bag-of-words
  vector.  It needs no network, is a pure function of (text, seed, dim),
  and gives related texts higher cosine than unrelated ones, which is all
  the cache and benchmark logic require.
* :class:`RemoteEmbedder` calls an OpenAI-compatible ``/embeddings``
  endpoint over HTTP.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from hashlib import blake2b

import httpx
import numpy as np

from .errors import DimensionMismatch, EmptyText, NetworkError, ProtocolError, ZeroVector

UnitVector = np.ndarray

EMBED_API_KEY_ENV = "MEMROUTER_EMBED_API_KEY"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass
class EmbedderConfig:
    """Settings for either embedder backend.

    ``endpoint`` and ``model_name`` are only meaningful for the remote
    backend; ``seed`` only for the deterministic one.
    """

    dimension: int = 256
    endpoint: str | None = None
    model_name: str | None = None
    seed: int = 0
    timeout_s: float = 30.0

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")


def normalize(v, dim: int | None = None) -> UnitVector:
    """Scale ``v`` to unit L2 norm.

    Raises ZeroVector for degenerate input (norm below 1e-12); callers must
    never cache such a vector.
    """
    arr = np.asarray(v, dtype=np.float32)
    if arr.ndim != 1:
        raise ValueError("expected a 1-D vector")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(dim, arr.shape[0], "normalize")
    norm = float(np.linalg.norm(arr))
    if norm <= 1e-12:
        raise ZeroVector("cannot normalize a zero vector")
    return arr / np.float32(norm)


def cosine(a: UnitVector, b: UnitVector) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1] against rounding."""
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(a.shape[0], b.shape[0], "cosine")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def _token_slot(token: str, dim: int, seed: int) -> tuple[int, float]:
    digest = blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little")
    ).digest()
    value = int.from_bytes(digest, "little")
    index = (value >> 1) % dim
    sign = 1.0 if value & 1 else -1.0
    return index, sign


def embed_text(text: str, cfg: EmbedderConfig) -> UnitVector:
    """Deterministic test embedding.

    Lowercased alphanumeric tokens are each hashed (seeded) to an index in
    ``[0, dim)`` and a sign in {-1, +1}; signed token counts accumulate into
    a raw vector which is then normalized.  The sign bit keeps unrelated
    texts concentrated near zero cosine instead of uniformly positive.
    """
    if not text.strip():
        raise EmptyText("cannot embed empty text")
    raw = np.zeros(cfg.dimension, dtype=np.float32)
    for token in _TOKEN_RE.findall(text.lower()):
        index, sign = _token_slot(token, cfg.dimension, cfg.seed)
        raw[index] += sign
    return normalize(raw)


class Embedder:
    """Async embedding interface consumed by the agents."""

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    async def embed(self, text: str) -> UnitVector:
        raise NotImplementedError


class DeterministicEmbedder(Embedder):
    """Hashing embedder; safe for unrestricted concurrent use."""

    def __init__(self, cfg: EmbedderConfig | None = None):
        self.cfg = cfg or EmbedderConfig()

    @property
    def dimension(self) -> int:
        return self.cfg.dimension

    async def embed(self, text: str) -> UnitVector:
        return embed_text(text, self.cfg)


class RemoteEmbedder(Embedder):
    """Client for an OpenAI-compatible embeddings HTTP API.

    POSTs ``{endpoint}/embeddings`` with ``{"model": ..., "input": text}``
    and reads ``data[0].embedding``.  The returned vector is normalized
    before use.  Holds no mutable state beyond the connection pool, so it
    may be shared across tasks.
    """

    def __init__(self, cfg: EmbedderConfig, transport: httpx.AsyncBaseTransport | None = None):
        if not cfg.endpoint or not cfg.model_name:
            raise ValueError("remote embedder needs endpoint and model_name")
        self.cfg = cfg
        headers = {}
        api_key = os.environ.get(EMBED_API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.AsyncClient(
            headers=headers, timeout=cfg.timeout_s, transport=transport
        )

    @property
    def dimension(self) -> int:
        return self.cfg.dimension

    async def embed(self, text: str) -> UnitVector:
        if not text.strip():
            raise EmptyText("cannot embed empty text")
        url = self.cfg.endpoint.rstrip("/") + "/embeddings"
        body = {"model": self.cfg.model_name, "input": text}
        try:
            response = await self._client.post(url, json=body)
        except httpx.HTTPError as exc:
            raise NetworkError(f"embeddings request failed: {exc}") from exc
        if response.status_code != 200:
            raise NetworkError(f"embeddings endpoint returned HTTP {response.status_code}")
        try:
            payload = response.json()
            values = payload["data"][0]["embedding"]
        except (ValueError, LookupError, TypeError) as exc:
            raise ProtocolError(f"malformed embeddings response: {exc}") from exc
        if not isinstance(values, list) or len(values) != self.cfg.dimension:
            raise ProtocolError(
                f"embedding has {len(values) if isinstance(values, list) else 'no'} values, "
                f"expected {self.cfg.dimension}"
            )
        try:
            return normalize(np.asarray(values, dtype=np.float32))
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"non-numeric embedding values: {exc}") from exc

    async def aclose(self) -> None:
        await self._client.aclose()


async def embed_remote(text: str, cfg: EmbedderConfig) -> UnitVector:
    """One-shot remote embedding; prefer a long-lived RemoteEmbedder in loops."""
    client = RemoteEmbedder(cfg)
    try:
        return await client.embed(text)
    finally:
        await client.aclose()
