"""HTTP clients for the external chat-completion and embedding services.

Both speak a generic OpenAI-style JSON protocol and are configured purely by
base URL and API key, via environment variables or explicit config. Transient
failures (timeouts, connection errors, 429, 5xx) are retried up to 3 times
with exponential backoff before surfacing as a retryable ProviderError; other
HTTP errors fail immediately as non-retryable.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass

import httpx

logger = logging.getLogger(__name__)

__all__ = [
    "ProviderError",
    "EmbeddingDimensionError",
    "ProviderConfig",
    "ChatClient",
    "EmbeddingClient",
    "TokenBucket",
]

MAX_ATTEMPTS = 3
_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class ProviderError(Exception):
    def __init__(self, message: str, *, retryable: bool):
        super().__init__(message)
        self.retryable = retryable


class EmbeddingDimensionError(ProviderError):
    """The embedding service returned a vector of the wrong dimension.

    Never retryable: the service is misconfigured, not flaky.
    """

    def __init__(self, message: str):
        super().__init__(message, retryable=False)


@dataclass(frozen=True)
class ProviderConfig:
    llm_url: str | None = None
    llm_key: str | None = None
    embed_url: str | None = None
    embed_key: str | None = None
    offline: bool = False

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "ProviderConfig":
        e = os.environ if env is None else env
        return cls(
            llm_url=e.get("AGENTLENS_LLM_URL") or None,
            llm_key=e.get("AGENTLENS_LLM_KEY") or None,
            embed_url=e.get("AGENTLENS_EMBED_URL") or None,
            embed_key=e.get("AGENTLENS_EMBED_KEY") or None,
            offline=e.get("AGENTLENS_OFFLINE") == "1",
        )

    @property
    def llm_available(self) -> bool:
        return not self.offline and bool(self.llm_url)

    @property
    def embed_available(self) -> bool:
        return not self.offline and bool(self.embed_url)


class TokenBucket:
    """Simple thread-safe rate limiter: `rate` tokens per second, holding at
    most `capacity`. acquire() blocks until a token is available."""

    def __init__(self, rate: float = 10.0, capacity: float = 10.0,
                 clock=time.monotonic, sleep=time.sleep):
        self.rate = rate
        self.capacity = capacity
        self._tokens = capacity
        self._last = clock()
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


class _BaseClient:
    def __init__(self, base_url: str, api_key: str | None = None, *,
                 timeout: float = 30.0, backoff_base: float = 0.5,
                 transport: httpx.BaseTransport | None = None,
                 bucket: TokenBucket | None = None,
                 sleep=time.sleep):
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"), headers=headers,
            timeout=timeout, transport=transport,
        )
        self._backoff_base = backoff_base
        self._bucket = bucket
        self._sleep = sleep

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            if attempt:
                delay = min(self._backoff_base * 2 ** (attempt - 1), 30.0)
                self._sleep(delay)
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                response = self._client.post(path, json=payload)
            except httpx.TransportError as exc:
                last_error = exc
                logger.warning("provider transport error (attempt %d/%d): %s",
                               attempt + 1, MAX_ATTEMPTS, exc)
                continue
            if response.status_code in _RETRYABLE_STATUS:
                last_error = ProviderError(
                    f"provider returned {response.status_code}", retryable=True)
                logger.warning("provider status %d (attempt %d/%d)",
                               response.status_code, attempt + 1, MAX_ATTEMPTS)
                continue
            if response.status_code >= 400:
                raise ProviderError(
                    f"provider returned {response.status_code}: {response.text[:200]}",
                    retryable=False)
            try:
                return response.json()
            except ValueError as exc:
                raise ProviderError(f"provider sent invalid JSON: {exc}", retryable=False)
        raise ProviderError(
            f"provider unreachable after {MAX_ATTEMPTS} attempts: {last_error}",
            retryable=True)


class ChatClient(_BaseClient):
    def __init__(self, base_url: str, api_key: str | None = None, *,
                 model: str = "default", **kwargs):
        super().__init__(base_url, api_key, **kwargs)
        self.model = model

    def complete(self, prompt: str, *, max_tokens: int = 512) -> str:
        data = self._post("/chat/completions", {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": max_tokens,
        })
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ProviderError("chat response missing choices[0].message.content",
                                retryable=False)


class EmbeddingClient(_BaseClient):
    def __init__(self, base_url: str, api_key: str | None = None, *,
                 model: str = "default", expected_dim: int = 1536, **kwargs):
        super().__init__(base_url, api_key, **kwargs)
        self.model = model
        self.expected_dim = expected_dim

    def embed(self, texts: list[str]) -> list[list[float]]:
        data = self._post("/embeddings", {"model": self.model, "input": texts})
        try:
            rows = [entry["embedding"] for entry in data["data"]]
        except (KeyError, TypeError):
            raise ProviderError("embedding response missing data[].embedding",
                                retryable=False)
        if len(rows) != len(texts):
            raise ProviderError(
                f"embedding count mismatch: sent {len(texts)}, got {len(rows)}",
                retryable=False)
        for row in rows:
            if len(row) != self.expected_dim:
                raise EmbeddingDimensionError(
                    f"expected {self.expected_dim} dimensions, got {len(row)}")
        return rows
