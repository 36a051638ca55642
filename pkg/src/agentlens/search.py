"""Keyword and semantic search over agent memories.

Lexical mode is a case-insensitive substring scan over Memory operation texts
(score 1.0 per hit). Semantic mode compares the query embedding against the
cached embeddings of those texts; it refuses to run when the cache has not
been built, rather than silently recomputing embeddings at query time.
A flag widens either mode to every operation kind.
"""

from __future__ import annotations

from dataclasses import dataclass

from .embedding import cosine
from .model import Operation, OperationKind, Timeline
from .summarize import SummaryEngine

__all__ = ["SearchHit", "EmbeddingsNotBuiltError", "memory_search"]

DEFAULT_THRESHOLD = 0.80
_SIM_EPS = 1e-9


class EmbeddingsNotBuiltError(RuntimeError):
    """Semantic search was requested before operation embeddings exist."""

    def __init__(self) -> None:
        super().__init__(
            "operation embeddings are not built for this project; run the "
            "summarize/embed pipeline stage first")


@dataclass(frozen=True)
class SearchHit:
    agent: str
    time: int
    op_index: int
    score: float
    mode: str


def _candidates(timeline: Timeline, include_all_kinds: bool) -> list[Operation]:
    return [op for op in timeline.iter_operations()
            if include_all_kinds or op.kind is OperationKind.MEMORY]


def memory_search(
    timeline: Timeline,
    query: str,
    mode: str = "lexical",
    threshold: float = DEFAULT_THRESHOLD,
    engine: SummaryEngine | None = None,
    include_all_kinds: bool = False,
) -> list[SearchHit]:
    """Hits sorted by (time, agent, op_index)."""
    if not query.strip():
        raise ValueError("query must be non-empty")
    if mode not in ("lexical", "semantic"):
        raise ValueError(f"mode must be 'lexical' or 'semantic', got {mode!r}")
    ops = _candidates(timeline, include_all_kinds)
    hits: list[SearchHit] = []
    if mode == "lexical":
        needle = query.lower()
        for op in ops:
            if needle in op.text.lower():
                hits.append(SearchHit(op.agent, op.time, op.op_index, 1.0, "lexical"))
    else:
        if engine is None:
            raise EmbeddingsNotBuiltError()
        missing = [op for op in ops if not engine.has_embedding(op.text)]
        if missing:
            raise EmbeddingsNotBuiltError()
        query_vec = engine.embed(query)
        for op in ops:
            score = cosine(query_vec, engine.embed(op.text))
            if score >= threshold - _SIM_EPS:
                hits.append(SearchHit(op.agent, op.time, op.op_index,
                                      min(1.0, score), "semantic"))
    hits.sort(key=lambda h: (h.time, h.agent, h.op_index))
    return hits
