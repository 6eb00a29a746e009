"""Follow-up topic prediction strategies for the background agent.

Three interchangeable strategies produce short document-style topic
descriptions (phrases that embed near document content, not questions):

* scripted: replays per-turn topic labels supplied by a benchmark
  scenario.  It is the deterministic oracle that lets benchmark runs
  measure the architecture rather than prediction quality.
* keyword: content terms of the last user turn, ranked by their frequency
  across the context window, rendered as "information about {term}".
  Lightweight fallback; needs no network.
* llm: one chat-completion call, response parsed as one topic per line.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import httpx

from .errors import PredictorUnavailable

LLM_API_KEY_ENV = "MEMROUTER_LLM_API_KEY"

# Fixed stopword list for the keyword strategy; pinned by tests.
STOPWORDS = frozenset(
    """
    a about after all am an and any are as at be been before but by can could
    did do does down for from get had has have he her his how i if in into is
    it its just me my no not of on or our out over she should so some tell
    than that the their them then there these they this those to under up us
    want was we were what when where which who why will with would you your
    """.split()
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_LINE_PREFIX_RE = re.compile(r"^\s*(?:\d+\s*[.):]\s*|[-*•]\s*)?(.*?)\s*$")

_PROMPT = (
    "You anticipate what a user will ask about next. Given the recent "
    "conversation, list the most likely follow-up topics as short "
    "document-style descriptions (noun phrases that read like knowledge-"
    "base content, not questions). One topic per line, no commentary."
)


@dataclass(frozen=True)
class Prediction:
    text: str
    origin_turn: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("prediction text must be non-empty")


@dataclass
class PredictorConfig:
    strategy: str = "scripted"
    max_predictions: int = 5
    context_turns: int = 6
    llm_endpoint: str | None = None
    llm_model: str | None = None
    temperature: float = 0.3
    timeout_s: float = 30.0

    def __post_init__(self):
        if self.strategy not in ("llm", "keyword", "scripted"):
            raise ValueError(f"unknown predictor strategy {self.strategy!r}")
        if self.max_predictions < 1:
            raise ValueError("max_predictions must be >= 1")
        if self.context_turns < 1:
            raise ValueError("context_turns must be >= 1")


class Predictor:
    """Async prediction interface; all strategies are stateless per call."""

    async def predict(
        self, context: list[tuple[str, str]], turn_index: int
    ) -> list[Prediction]:
        raise NotImplementedError


class ScriptedPredictor(Predictor):
    """Benchmark oracle: emits the labels scripted for the following turn."""

    def __init__(self, labels_by_turn: list[list[str]], cfg: PredictorConfig | None = None):
        self.labels_by_turn = labels_by_turn
        self.cfg = cfg or PredictorConfig(strategy="scripted")

    async def predict(self, context, turn_index):
        nxt = turn_index + 1
        if not 0 <= nxt < len(self.labels_by_turn):
            return []
        labels = self.labels_by_turn[nxt][: self.cfg.max_predictions]
        return [Prediction(text=label, origin_turn=turn_index) for label in labels]


class KeywordPredictor(Predictor):
    """Salient terms of the last user turn, weighted by window frequency."""

    def __init__(self, cfg: PredictorConfig | None = None):
        self.cfg = cfg or PredictorConfig(strategy="keyword")

    async def predict(self, context, turn_index):
        if not context:
            raise ValueError("keyword strategy needs a non-empty context")
        window = context[-self.cfg.context_turns:]
        last_user = next((text for role, text in reversed(window) if role == "user"), None)
        if last_user is None:
            raise ValueError("keyword strategy needs at least one user turn")
        counts: dict[str, int] = {}
        for _, text in window:
            for token in _TOKEN_RE.findall(text.lower()):
                counts[token] = counts.get(token, 0) + 1
        candidates = []
        seen = set()
        for token in _TOKEN_RE.findall(last_user.lower()):
            if token in STOPWORDS or token in seen:
                continue
            seen.add(token)
            candidates.append(token)
        # Higher window frequency first; first mention breaks ties.
        candidates.sort(key=lambda t: -counts[t])
        return [
            Prediction(text=f"information about {term}", origin_turn=turn_index)
            for term in candidates[: self.cfg.max_predictions]
        ]


class LlmPredictor(Predictor):
    """One chat-completion call per prediction round."""

    def __init__(self, cfg: PredictorConfig, transport: httpx.AsyncBaseTransport | None = None):
        if not cfg.llm_endpoint or not cfg.llm_model:
            raise ValueError("llm strategy needs llm_endpoint and llm_model")
        self.cfg = cfg
        headers = {}
        api_key = os.environ.get(LLM_API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.AsyncClient(
            headers=headers, timeout=cfg.timeout_s, transport=transport
        )

    async def predict(self, context, turn_index):
        if not context:
            raise ValueError("llm strategy needs a non-empty context")
        window = context[-self.cfg.context_turns:]
        transcript = "\n".join(f"{role}: {text}" for role, text in window)
        body = {
            "model": self.cfg.llm_model,
            "temperature": self.cfg.temperature,
            "messages": [
                {"role": "system", "content": _PROMPT},
                {"role": "user", "content": transcript},
            ],
        }
        url = self.cfg.llm_endpoint.rstrip("/") + "/chat/completions"
        try:
            response = await self._client.post(url, json=body)
        except httpx.HTTPError as exc:
            raise PredictorUnavailable(f"chat completion failed: {exc}") from exc
        if response.status_code != 200:
            raise PredictorUnavailable(
                f"chat completion returned HTTP {response.status_code}"
            )
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise PredictorUnavailable(f"malformed chat response: {exc}") from exc
        return parse_topic_lines(str(content), turn_index, self.cfg.max_predictions)

    async def aclose(self) -> None:
        await self._client.aclose()


def parse_topic_lines(content: str, turn_index: int, limit: int) -> list[Prediction]:
    """Numbered/bulleted/plain lines -> at most ``limit`` Predictions."""
    out = []
    for line in content.splitlines():
        stripped = _LINE_PREFIX_RE.match(line).group(1)
        if stripped:
            out.append(Prediction(text=stripped, origin_turn=turn_index))
        if len(out) == limit:
            break
    return out
