"""Behavior descriptions and embeddings, with caching and offline fallbacks.

Every summary and embedding is keyed by a sha256 content hash and persisted
under the project's cache directory, so a second run over the same log hits
the cache only. When no provider is configured (or AGENTLENS_OFFLINE=1), the
deterministic fallbacks stand in: a rule-based text+emoji summary and the
hash-based embedding. Cache files are written atomically under a file lock;
reads need no lock.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from filelock import FileLock

from .embedding import DIM, fallback_embed, normalize
from .model import Behavior, Timeline
from .providers import ChatClient, EmbeddingClient, ProviderConfig, TokenBucket

logger = logging.getLogger(__name__)

__all__ = [
    "SummaryRequest",
    "SummaryResult",
    "EngineStats",
    "SummaryEngine",
    "fallback_summarize",
    "content_hash_of",
    "prompt_template",
]

DEFAULT_BUDGET = 280

# Checked against each operation text in order; the first hit supplies both
# the description label and the emoji, overriding the task-kind defaults.
KEYWORD_EMOJI: tuple[tuple[str, str], ...] = (
    ("sleep", "\U0001F634"),
    ("party", "\U0001F389"),
    ("write", "✍️"),
    ("writing", "✍️"),
    ("cook", "\U0001F373"),
    ("eat", "\U0001F37D️"),
    ("lunch", "\U0001F37D️"),
    ("dinner", "\U0001F37D️"),
    ("walk", "\U0001F6B6"),
    ("read", "\U0001F4D6"),
    ("talk", "\U0001F4AC"),
    ("chat", "\U0001F4AC"),
    ("shop", "\U0001F6CD️"),
    ("clean", "\U0001F9F9"),
    ("music", "\U0001F3B5"),
)

TASK_KIND_EMOJI = {
    "perceive": "\U0001F440",
    "think": "\U0001F4AD",
    "act": "\U0001F3C3",
}


@dataclass(frozen=True)
class SummaryRequest:
    behavior: Behavior
    budget: int = DEFAULT_BUDGET
    style: str = "text_and_emoji"


@dataclass(frozen=True)
class SummaryResult:
    description: str
    emoji: str
    provider: str  # "llm" or "fallback"
    content_hash: str


@dataclass
class EngineStats:
    llm_calls: int = 0
    embed_calls: int = 0
    fallback_summaries: int = 0
    fallback_embeds: int = 0
    cache_hits: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "llm_calls": self.llm_calls,
            "embed_calls": self.embed_calls,
            "fallback_summaries": self.fallback_summaries,
            "fallback_embeds": self.fallback_embeds,
            "cache_hits": self.cache_hits,
        }


def prompt_template() -> str:
    return resources.files("agentlens").joinpath("templates/summary_prompt.txt").read_text("utf-8")


def content_hash_of(texts: list[str]) -> str:
    return hashlib.sha256("\n".join(texts).encode("utf-8")).hexdigest()


def _op_texts(timeline: Timeline, behavior: Behavior) -> list[str]:
    return [timeline.operation(ref).text for ref in behavior.operations]


def _truncate(text: str, budget: int) -> str:
    if len(text) <= budget:
        return text
    cut = text[:budget]
    if " " in cut:
        cut = cut[:cut.rfind(" ")]
    logger.warning("summary truncated at word boundary to fit budget %d", budget)
    return cut


def fallback_summarize(timeline: Timeline, behavior: Behavior,
                       budget: int = DEFAULT_BUDGET) -> SummaryResult:
    """Deterministic rule-based summary.

    Label: the first keyword found scanning operation texts in order, else
    the dominant task kind (ties go to the kind that occurs earliest).
    Body: the first decision operation's text, else the first text.
    Emoji: from the matched keyword, else the task-kind table.
    """
    if not behavior.operations:
        raise ValueError("behavior has no operations to summarize")
    ops = [timeline.operation(ref) for ref in behavior.operations]
    texts = [op.text for op in ops]

    label: str | None = None
    emoji: str | None = None
    for text in texts:
        lowered = text.lower()
        for keyword, symbol in KEYWORD_EMOJI:
            if keyword in lowered:
                label, emoji = keyword, symbol
                break
        if label is not None:
            break

    if label is None:
        counts: dict[str, int] = {}
        first_seen: dict[str, int] = {}
        for i, op in enumerate(ops):
            kind = op.task_kind.value
            counts[kind] = counts.get(kind, 0) + 1
            first_seen.setdefault(kind, i)
        label = max(counts, key=lambda k: (counts[k], -first_seen[k]))
        emoji = TASK_KIND_EMOJI[label]

    body = next((op.text for op in ops if op.kind.value == "decision"), texts[0])
    description = _truncate(f"{label}: {body}", budget)
    return SummaryResult(
        description=description,
        emoji=emoji,
        provider="fallback",
        content_hash=content_hash_of(texts),
    )


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SummaryEngine:
    """Cached gateway to descriptions and embeddings for one project.

    cache_dir holds two stores: summaries/<hash>.json and
    embeddings/<hash>.npy. Either provider being unavailable silently routes
    to the deterministic fallback; provider failures after retries surface as
    ProviderError.
    """

    def __init__(self, cache_dir: str | Path, config: ProviderConfig | None = None,
                 *, parallelism: int = 4, rate_limit: TokenBucket | None = None,
                 chat_client: ChatClient | None = None,
                 embed_client: EmbeddingClient | None = None):
        self.cache_dir = Path(cache_dir)
        self.config = config or ProviderConfig.from_env()
        self.stats = EngineStats()
        self.parallelism = parallelism
        self._summary_dir = self.cache_dir / "summaries"
        self._embed_dir = self.cache_dir / "embeddings"
        self._summary_dir.mkdir(parents=True, exist_ok=True)
        self._embed_dir.mkdir(parents=True, exist_ok=True)
        self._lock = FileLock(str(self.cache_dir / ".write.lock"))
        bucket = rate_limit or TokenBucket()
        self._chat = chat_client
        if self._chat is None and self.config.llm_available:
            self._chat = ChatClient(self.config.llm_url, self.config.llm_key, bucket=bucket)
        self._embedder = embed_client
        if self._embedder is None and self.config.embed_available:
            self._embedder = EmbeddingClient(self.config.embed_url, self.config.embed_key,
                                             expected_dim=DIM, bucket=bucket)
        if self.config.offline:
            self._chat = None
            self._embedder = None

    # -- descriptions ------------------------------------------------------

    def generate_description(self, timeline: Timeline, request: SummaryRequest) -> SummaryResult:
        behavior = request.behavior
        if not behavior.operations:
            raise ValueError("behavior has no operations to summarize")
        texts = _op_texts(timeline, behavior)
        key = content_hash_of(texts)
        cached = self._load_summary(key)
        if cached is not None:
            self.stats.cache_hits += 1
            return cached
        if self._chat is None:
            result = fallback_summarize(timeline, behavior, request.budget)
            self.stats.fallback_summaries += 1
        else:
            result = self._llm_summarize(timeline, behavior, texts, key, request.budget)
            self.stats.llm_calls += 1
        self._store_summary(key, result)
        return result

    def _llm_summarize(self, timeline: Timeline, behavior: Behavior,
                       texts: list[str], key: str, budget: int) -> SummaryResult:
        prompt = prompt_template().format(
            budget=budget, operation_texts="\n".join(f"- {t}" for t in texts))
        content = self._chat.complete(prompt)
        description, emoji = self._parse_llm_reply(content)
        if not emoji:
            emoji = fallback_summarize(timeline, behavior, budget).emoji
        return SummaryResult(
            description=_truncate(description, budget) or "(no description)",
            emoji=emoji,
            provider="llm",
            content_hash=key,
        )

    @staticmethod
    def _parse_llm_reply(content: str) -> tuple[str, str]:
        text = content.strip()
        if text.startswith("```"):
            text = text.strip("`")
            if text.startswith("json"):
                text = text[4:]
        try:
            body = json.loads(text)
            return str(body.get("description", "")).strip(), str(body.get("emoji", "")).strip()
        except ValueError:
            return content.strip(), ""

    def _load_summary(self, key: str) -> SummaryResult | None:
        path = self._summary_dir / f"{key}.json"
        if not path.exists():
            return None
        body = json.loads(path.read_text("utf-8"))
        return SummaryResult(
            description=body["description"], emoji=body["emoji"],
            provider=body["provider"], content_hash=body["content_hash"],
        )

    def _store_summary(self, key: str, result: SummaryResult) -> None:
        payload = json.dumps({
            "description": result.description,
            "emoji": result.emoji,
            "provider": result.provider,
            "content_hash": result.content_hash,
        }, ensure_ascii=False, sort_keys=True).encode("utf-8")
        with self._lock:
            _atomic_write_bytes(self._summary_dir / f"{key}.json", payload)

    # -- embeddings --------------------------------------------------------

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: list[str]) -> np.ndarray:
        """Vectors for every text, cache-first, in input order."""
        out = np.zeros((len(texts), DIM), dtype=np.float64)
        misses: dict[str, list[int]] = {}
        for i, text in enumerate(texts):
            key = hashlib.sha256(text.encode("utf-8")).hexdigest()
            cached = self._load_embedding(key)
            if cached is not None:
                self.stats.cache_hits += 1
                out[i] = cached
            else:
                misses.setdefault(text, []).append(i)
        if not misses:
            return out
        unique = sorted(misses)
        if self._embedder is None:
            vectors = [fallback_embed(t) for t in unique]
            self.stats.fallback_embeds += len(unique)
        else:
            vectors = self._provider_embed(unique)
            self.stats.embed_calls += len(unique)
        for text, vec in zip(unique, vectors):
            key = hashlib.sha256(text.encode("utf-8")).hexdigest()
            self._store_embedding(key, vec)
            for i in misses[text]:
                out[i] = vec
        return out

    def _provider_embed(self, texts: list[str], batch_size: int = 64) -> list[np.ndarray]:
        batches = [texts[i:i + batch_size] for i in range(0, len(texts), batch_size)]
        results: list[list[np.ndarray]] = [None] * len(batches)  # type: ignore[list-item]

        def run(idx: int) -> None:
            rows = self._embedder.embed(batches[idx])
            results[idx] = [normalize(np.asarray(r, dtype=np.float64)) for r in rows]

        if len(batches) == 1:
            run(0)
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=self.parallelism) as pool:
                futures = [pool.submit(run, i) for i in range(len(batches))]
                for f in futures:
                    f.result()
        return [vec for batch in results for vec in batch]

    def has_embedding(self, text: str) -> bool:
        key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return (self._embed_dir / f"{key}.npy").exists()

    def _load_embedding(self, key: str) -> np.ndarray | None:
        path = self._embed_dir / f"{key}.npy"
        if not path.exists():
            return None
        return np.load(path)

    def _store_embedding(self, key: str, vec: np.ndarray) -> None:
        path = self._embed_dir / f"{key}.npy"
        buffer = Path(tempfile.mkdtemp(dir=self.cache_dir)) / "vec.npy"
        np.save(buffer, vec)
        with self._lock:
            os.replace(buffer, path)
        buffer.parent.rmdir()

    def close(self) -> None:
        for client in (self._chat, self._embedder):
            if client is not None:
                client.close()
