"""Explicit and implicit cause edges between operations, and their lift to
behavior-level edges.

Explicit edges are read straight from the log's cause lists (referential
integrity was enforced at ingest). Implicit edges are inferred: a candidate
operation strictly preceding the target, within the requested scope, is
linked when the cosine similarity of the two operation-text embeddings
reaches the threshold delta. Threshold comparisons tolerate 1e-9 so that
identical texts (similarity 1.0 up to float rounding) always pass delta = 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .embedding import DEGENERATE_NORM
from .model import Behavior, OperationRef, Timeline
from .segment import SegmentationResult
from .summarize import SummaryEngine

logger = logging.getLogger(__name__)

__all__ = [
    "CauseEdge",
    "BehaviorEdge",
    "explicit_causes",
    "implicit_causes",
    "mine_implicit_edges",
    "lift_to_behaviors",
    "ref_payload",
    "edge_payload",
]

DEFAULT_DELTA = 0.85
DEFAULT_MAX_EDGES = 20
_SIM_EPS = 1e-9
SCOPES = ("sameAgent", "allAgents")


@dataclass(frozen=True)
class CauseEdge:
    src: OperationRef
    dst: OperationRef
    kind: str  # "explicit" or "implicit"
    similarity: float = 1.0


@dataclass(frozen=True)
class BehaviorEdge:
    src_segment: Behavior
    dst_segment: Behavior
    supporting_edges: tuple[CauseEdge, ...]

    @property
    def weight(self) -> int:
        return len(self.supporting_edges)


def ref_payload(ref: OperationRef) -> dict:
    return {"t": ref.time, "agent": ref.agent, "opIndex": ref.op_index}


def edge_payload(edge: CauseEdge) -> dict:
    return {"src": ref_payload(edge.src), "dst": ref_payload(edge.dst),
            "kind": edge.kind, "similarity": round(edge.similarity, 9)}


def explicit_causes(timeline: Timeline, ref: OperationRef) -> list[CauseEdge]:
    """One edge per logged cause of the operation, in log order."""
    op = timeline.operation(ref)
    return [CauseEdge(src=src, dst=ref, kind="explicit", similarity=1.0)
            for src in op.explicit_causes]


def _candidate_refs(timeline: Timeline, ref: OperationRef, scope: str) -> list[OperationRef]:
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}, got {scope!r}")
    agent = ref.agent if scope == "sameAgent" else None
    return [op.ref for op in timeline.iter_operations(agent)
            if op.ref.strictly_precedes(ref)]


def implicit_causes(
    timeline: Timeline,
    engine: SummaryEngine,
    ref: OperationRef,
    delta: float = DEFAULT_DELTA,
    scope: str = "sameAgent",
    max_edges: int | None = DEFAULT_MAX_EDGES,
) -> list[CauseEdge]:
    """Similarity-inferred predecessors of one operation.

    Result is sorted by similarity descending (ties toward the earlier
    operation) and capped at max_edges (None disables the cap). Duplicates of
    logged explicit causes are suppressed. A degenerate target embedding
    yields an empty result with a warning.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    dst_op = timeline.operation(ref)
    candidates = _candidate_refs(timeline, ref, scope)
    if not candidates:
        return []
    texts = [timeline.operation(c).text for c in candidates]
    vectors = engine.embed_many(texts + [dst_op.text])
    dst_vec = vectors[-1]
    if float(np.linalg.norm(dst_vec)) < DEGENERATE_NORM:
        logger.warning("operation (%d, %s, %d) has a degenerate embedding; "
                       "no implicit causes inferred", ref.time, ref.agent, ref.op_index)
        return []
    sims = vectors[:-1] @ dst_vec
    explicit = set(dst_op.explicit_causes)
    edges = [
        CauseEdge(src=c, dst=ref, kind="implicit", similarity=float(min(1.0, s)))
        for c, s in zip(candidates, sims)
        if s >= delta - _SIM_EPS and c not in explicit
    ]
    edges.sort(key=lambda e: (-e.similarity, e.src.time, e.src.agent, e.src.op_index))
    if max_edges is not None:
        edges = edges[:max_edges]
    return edges


def mine_implicit_edges(
    timeline: Timeline,
    engine: SummaryEngine,
    delta: float = DEFAULT_DELTA,
    scope: str = "sameAgent",
    max_edges_per_dst: int | None = DEFAULT_MAX_EDGES,
) -> list[CauseEdge]:
    """Implicit edges for every operation as target, in (dst, rank) order."""
    out: list[CauseEdge] = []
    for op in timeline.iter_operations():
        out.extend(implicit_causes(timeline, engine, op.ref, delta=delta,
                                   scope=scope, max_edges=max_edges_per_dst))
    return out


def _containing_segment(segmentations: list[SegmentationResult],
                        ref: OperationRef) -> tuple[int, int] | None:
    for si, seg_result in enumerate(segmentations):
        if seg_result.agent != ref.agent:
            continue
        for bi, seg in enumerate(seg_result.segments):
            if seg.start <= ref.time < seg.end:
                return si, bi
    return None


def lift_to_behaviors(
    edges: Iterable[CauseEdge],
    segmentations: SegmentationResult | Iterable[SegmentationResult],
    include_self_loops: bool = False,
) -> list[BehaviorEdge]:
    """Group operation edges by (segment of src, segment of dst).

    Edges whose endpoints land in the same segment are self-loops and dropped
    unless include_self_loops is set. An endpoint not covered by any provided
    segmentation is an error.
    """
    if isinstance(segmentations, SegmentationResult):
        segmentations = [segmentations]
    else:
        segmentations = list(segmentations)
    groups: dict[tuple[tuple[int, int], tuple[int, int]], list[CauseEdge]] = {}
    for edge in edges:
        src_key = _containing_segment(segmentations, edge.src)
        dst_key = _containing_segment(segmentations, edge.dst)
        if src_key is None or dst_key is None:
            bad = edge.src if src_key is None else edge.dst
            raise ValueError(
                f"operation ({bad.time}, {bad.agent!r}, {bad.op_index}) is outside "
                "every provided segmentation")
        if src_key == dst_key and not include_self_loops:
            continue
        groups.setdefault((src_key, dst_key), []).append(edge)
    out = []
    for (src_key, dst_key) in sorted(groups):
        supporting = groups[(src_key, dst_key)]
        out.append(BehaviorEdge(
            src_segment=segmentations[src_key[0]].segments[src_key[1]],
            dst_segment=segmentations[dst_key[0]].segments[dst_key[1]],
            supporting_edges=tuple(supporting),
        ))
    return out
