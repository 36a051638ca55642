"""Single-document JSON export of everything derived from a project.

The document is deterministic byte-for-byte: records appear in the
serialization order of the stored log, floats are rounded to 9 decimal
places before encoding, and all keys are sorted. Embedding vectors are
deliberately excluded; they are cache content, not analysis results.
"""

from __future__ import annotations

import json
from pathlib import Path

from .causes import DEFAULT_DELTA, edge_payload, explicit_causes, mine_implicit_edges
from .layout import compute_interaction_areas
from .model import Timeline
from .pipeline import point_behaviors
from .project import Project, canonical_json
from .summarize import SummaryEngine, SummaryRequest

EXPORT_VERSION = 1


def _round_floats(obj):
    if isinstance(obj, float):
        return round(obj, 9)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v) for v in obj]
    return obj


def _full_range(timeline: Timeline) -> tuple[int, int]:
    t0, t1 = timeline.time_bounds
    return t0, t1 + 1


def build_export_document(project: Project, engine: SummaryEngine, *,
                          n_segments: int = 10,
                          delta: float = DEFAULT_DELTA) -> dict:
    timeline = project.timeline
    range_ = _full_range(timeline)
    agents = timeline.meta.agent_ids()

    from .ingest import serialize_timeline

    records = [json.loads(line) for line in serialize_timeline(timeline)]

    summaries: dict[str, list[dict]] = {}
    for agent in agents:
        rows = []
        for behavior in point_behaviors(timeline, agent, range_):
            result = engine.generate_description(
                timeline, SummaryRequest(behavior=behavior))
            rows.append({"t": behavior.start,
                         "description": result.description,
                         "emoji": result.emoji,
                         "provider": result.provider})
        summaries[agent] = rows

    segmentations = []
    for agent in agents:
        try:
            result = project.segmentation(engine, agent, range_, n_segments)
        except ValueError:
            continue
        segmentations.append({
            "agent": agent,
            "range": list(range_),
            "n": n_segments,
            "changePoints": list(result.change_points),
            "segments": [
                {"start": seg.start, "end": seg.end,
                 "description": seg.description or "",
                 "emoji": seg.emoji or ""}
                for seg in result.segments
            ],
        })

    explicit = []
    for op in timeline.iter_operations():
        explicit.extend(edge_payload(e)
                        for e in explicit_causes(timeline, op.ref))
    implicit = [edge_payload(e)
                for e in mine_implicit_edges(timeline, engine, delta=delta)]

    areas = [
        {"agents": list(area.agents), "timeRange": [area.start, area.end],
         "location": area.location, "kind": area.kind}
        for area in compute_interaction_areas(timeline, agents, range_)
    ]

    return _round_floats({
        "version": EXPORT_VERSION,
        "projectId": project.project_id,
        "sourceDigest": project.source_digest,
        "range": list(range_),
        "timeline": records,
        "summaries": summaries,
        "segmentations": segmentations,
        "causes": {"delta": delta, "explicit": explicit, "implicit": implicit},
        "interactionAreas": areas,
    })


def write_export(project: Project, engine: SummaryEngine, out_path: Path | str,
                 **kwargs) -> bytes:
    document = build_export_document(project, engine, **kwargs)
    data = (canonical_json(document) + "\n").encode("utf-8")
    Path(out_path).write_bytes(data)
    return data
