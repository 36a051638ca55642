"""Behavior-structure pipeline: per-time-point summaries, embeddings, and
timeline segmentation over an arbitrary sub-range.

A zoomed call is a full re-run on the sub-range: per-point descriptions and
embeddings come from the cache (or the deterministic fallbacks), detection
runs on exactly the visible points, and the resulting segments tile the
requested range. The HTTP layer always goes through here with cached-or-
fallback summaries, so requests never wait on a live LLM call.
"""

from __future__ import annotations

import dataclasses

from .model import Behavior, TimeInterval, Timeline, behavior_of
from .segment import (
    EmbeddingSequence,
    SegmentationParams,
    SegmentationResult,
    win_change_points,
)
from .summarize import SummaryEngine, SummaryRequest

__all__ = ["point_behaviors", "build_embedding_sequence", "segment_timeline"]


def point_behaviors(timeline: Timeline, agent: str, range_: TimeInterval) -> list[Behavior]:
    """One Behavior per tick in the range that carries operations, in order."""
    t0, t1 = range_
    times = [t for t in timeline.op_times(agent) if t0 <= t < t1]
    return [behavior_of(timeline, agent, (t, t + 1)) for t in times]


def build_embedding_sequence(
    timeline: Timeline,
    engine: SummaryEngine,
    agent: str,
    range_: TimeInterval,
    budget: int = 280,
) -> tuple[EmbeddingSequence, list[Behavior]]:
    """Summarize and embed each operation-bearing tick of the range."""
    behaviors = point_behaviors(timeline, agent, range_)
    summaries = [
        engine.generate_description(timeline, SummaryRequest(behavior=b, budget=budget))
        for b in behaviors
    ]
    vectors = engine.embed_many([s.description for s in summaries])
    described = [
        dataclasses.replace(b, description=s.description, emoji=s.emoji, embedding=vec)
        for b, s, vec in zip(behaviors, summaries, vectors)
    ]
    seq = EmbeddingSequence(
        agent=agent,
        times=tuple(b.start for b in behaviors),
        vectors=vectors,
    )
    return seq, described


def segment_timeline(
    timeline: Timeline,
    engine: SummaryEngine,
    agent: str,
    range_: TimeInterval,
    n_segments: int = 10,
    window_width: int | None = None,
) -> SegmentationResult:
    """Segment one agent's activity over a range into at most N behaviors.

    Change points are detected over the per-tick embedding sequence; the range
    is then tiled at those points and each tile gets its own summary. Raises
    ValueError when the agent has no operations in the range.
    """
    seq, _ = build_embedding_sequence(timeline, engine, agent, range_)
    if len(seq) == 0:
        raise ValueError(f"agent {agent!r} has no operations in [{range_[0]}, {range_[1]})")
    params = SegmentationParams(window_width=window_width, target_segments=n_segments)
    result = win_change_points(seq, params)

    t0, t1 = range_
    boundaries = [t0, *result.change_points, t1]
    segments: list[Behavior] = []
    for start, end in zip(boundaries, boundaries[1:]):
        tile = behavior_of(timeline, agent, (start, end))
        if tile.operations:
            summary = engine.generate_description(timeline, SummaryRequest(behavior=tile))
            tile = dataclasses.replace(
                tile, description=summary.description, emoji=summary.emoji)
        segments.append(tile)
    return dataclasses.replace(result, segments=tuple(segments))
