"""Geometry for the macro timeline: location bands, agent lanes, interaction areas.

The y axis is split into one fixed-height band per declared location, in
alphabetical order of location id regardless of which agents are selected,
so widening the selection never reorders bands. Within a band each present
agent occupies its own lane; agents interacting over an interval are forced
onto adjacent lanes for that interval. Lane assignment between consecutive
eras uses greedy adjacent swaps to reduce line crossings, not an optimal
ordering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import (
    InvalidIntervalError,
    OperationKind,
    TaskKind,
    TimeInterval,
    Timeline,
    UnknownAgentError,
)
from .search import SearchHit
from .segment import SegmentationResult

BAND_HEIGHT = 100.0
LANE_MARGIN = 10.0
LANE_STEP = 10.0
MIN_DWELL = 3


@dataclass(frozen=True)
class InteractionArea:
    agents: tuple[str, ...]
    start: int
    end: int
    location: str
    kind: str  # "conversation" | "colocation"


@dataclass(frozen=True)
class AgentCurve:
    agent: str
    points: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class OutlineLayout:
    range: TimeInterval
    bands: tuple[tuple[str, str, float, float], ...]  # (id, name, y0, y1)
    curves: tuple[AgentCurve, ...]
    interaction_areas: tuple[InteractionArea, ...]
    segment_markers: tuple[dict, ...]
    memory_highlights: tuple[dict, ...]

    def to_payload(self) -> dict:
        return {
            "range": list(self.range),
            "bands": [{"location": loc, "name": name, "y0": y0, "y1": y1}
                      for loc, name, y0, y1 in self.bands],
            "curves": [{"agent": c.agent, "points": [[t, y] for t, y in c.points]}
                       for c in self.curves],
            "interactionAreas": [
                {"agents": list(a.agents), "timeRange": [a.start, a.end],
                 "location": a.location, "kind": a.kind}
                for a in self.interaction_areas
            ],
            "segmentMarkers": list(self.segment_markers),
            "memoryHighlights": list(self.memory_highlights),
        }


def location_intervals(timeline: Timeline, agent: str,
                       range_: TimeInterval) -> list[tuple[int, int, str]]:
    """Piecewise-constant location of `agent` over [range_[0], range_[1]).

    Starts at the first tick with a known (possibly carried-forward) location;
    an agent with no state on or before range start enters late.
    """
    a, b = range_
    states = sorted(
        (s for s in timeline.iter_agent_states(agent)), key=lambda s: s.time)
    intervals: list[tuple[int, int, str]] = []
    current: str | None = None
    start = a
    for st in states:
        if st.time <= a:
            current = st.location
            continue
        if st.time >= b:
            break
        if current is None:
            start = st.time
            current = st.location
            continue
        if st.location != current:
            if st.time > start:
                intervals.append((start, st.time, current))
            start = st.time
            current = st.location
    if current is not None and b > start:
        intervals.append((start, b, current))
    return intervals


def _mentions(text: str, agent_id: str, agent_name: str) -> bool:
    low = text.lower()
    for needle in (agent_id.lower(), agent_name.lower()):
        if needle and re.search(r"\b" + re.escape(needle) + r"\b", low):
            return True
    return False


def _speaks_to(timeline: Timeline, speaker: str, other: str,
               start: int, end: int) -> bool:
    other_name = timeline.meta.characteristic(other).name
    for op in timeline.iter_operations(agent=speaker):
        if not start <= op.time < end:
            continue
        if op.task_kind is TaskKind.ACT and op.kind is OperationKind.ENVIRONMENT:
            if _mentions(op.text, other, other_name):
                return True
    return False


def compute_interaction_areas(timeline: Timeline, agents: Sequence[str],
                              range_: TimeInterval,
                              min_dwell: int = MIN_DWELL) -> list[InteractionArea]:
    """Pairwise maximal same-location runs of at least `min_dwell` ticks.

    A run where each agent addresses the other in an act-phase environment
    operation is a conversation; otherwise it is mere colocation.
    """
    areas: list[InteractionArea] = []
    ordered = sorted(set(agents))
    for i, first in enumerate(ordered):
        iv_a = location_intervals(timeline, first, range_)
        for second in ordered[i + 1:]:
            iv_b = location_intervals(timeline, second, range_)
            for s, e, loc in _shared_runs(iv_a, iv_b):
                if e - s < min_dwell:
                    continue
                conv = (_speaks_to(timeline, first, second, s, e)
                        and _speaks_to(timeline, second, first, s, e))
                areas.append(InteractionArea(
                    agents=(first, second), start=s, end=e, location=loc,
                    kind="conversation" if conv else "colocation"))
    areas.sort(key=lambda a: (a.start, a.end, a.agents))
    return areas


def _shared_runs(iv_a: list[tuple[int, int, str]],
                 iv_b: list[tuple[int, int, str]]) -> list[tuple[int, int, str]]:
    raw: list[tuple[int, int, str]] = []
    for sa, ea, la in iv_a:
        for sb, eb, lb in iv_b:
            if la != lb:
                continue
            s, e = max(sa, sb), min(ea, eb)
            if s < e:
                raw.append((s, e, la))
    raw.sort()
    merged: list[tuple[int, int, str]] = []
    for s, e, loc in raw:
        if merged and merged[-1][2] == loc and merged[-1][1] == s:
            merged[-1] = (merged[-1][0], e, loc)
        else:
            merged.append((s, e, loc))
    return merged


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


def _cluster_units(members: list[str],
                   active: list[InteractionArea]) -> list[list[str]]:
    uf = _UnionFind(members)
    present = set(members)
    for area in active:
        x, y = area.agents
        if x in present and y in present:
            uf.union(x, y)
    groups: dict[str, list[str]] = {}
    for m in sorted(members):
        groups.setdefault(uf.find(m), []).append(m)
    return [groups[root] for root in sorted(groups)]


def _count_inversions(order: list[str], prev_pos: Mapping[str, tuple[int, int]],
                      band_index: int) -> int:
    cur = {agent: (band_index, lane) for lane, agent in enumerate(order)}
    shared = [a for a in order if a in prev_pos]
    bad = 0
    for i, x in enumerate(shared):
        for y in shared[i + 1:]:
            if (prev_pos[x] < prev_pos[y]) != (cur[x] < cur[y]):
                bad += 1
    return bad


def _reduce_crossings(units: list[list[str]],
                      prev_pos: Mapping[str, tuple[int, int]],
                      band_index: int, max_passes: int = 20) -> list[str]:
    def flat(us):
        return [a for u in us for a in u]

    best = _count_inversions(flat(units), prev_pos, band_index)
    for _ in range(max_passes):
        improved = False
        for i in range(len(units) - 1):
            trial = units[:i] + [units[i + 1], units[i]] + units[i + 2:]
            score = _count_inversions(flat(trial), prev_pos, band_index)
            if score < best:
                units = trial
                best = score
                improved = True
        if not improved:
            break
    return flat(units)


def compute_outline_layout(timeline: Timeline, range_: TimeInterval,
                           agents: Sequence[str], *,
                           min_dwell: int = MIN_DWELL,
                           segmentations: Mapping[str, SegmentationResult] | None = None,
                           highlights: Sequence[SearchHit] = ()) -> OutlineLayout:
    a, b = range_
    if not (isinstance(a, int) and isinstance(b, int) and a < b):
        raise InvalidIntervalError(f"invalid range ({a}, {b})")
    selected = sorted(set(agents))
    if not selected:
        raise ValueError("at least one agent must be selected")
    for agent in selected:
        if agent not in timeline.meta.agent_ids():
            raise UnknownAgentError(agent)

    band_ids = sorted(timeline.meta.location_ids())
    band_index = {loc: i for i, loc in enumerate(band_ids)}
    bands = tuple(
        (loc, timeline.meta.location_info(loc).name,
         i * BAND_HEIGHT, (i + 1) * BAND_HEIGHT)
        for i, loc in enumerate(band_ids))

    intervals = {agent: location_intervals(timeline, agent, range_)
                 for agent in selected}
    areas = compute_interaction_areas(timeline, selected, range_, min_dwell)

    ticks = {a, b}
    for ivs in intervals.values():
        for s, e, _ in ivs:
            ticks.add(s)
            ticks.add(e)
    eras = sorted(t for t in ticks if a <= t <= b)

    points: dict[str, list[tuple[int, float]]] = {agent: [] for agent in selected}
    prev_pos: dict[str, tuple[int, int]] = {}
    for s, e in zip(eras, eras[1:]):
        by_band: dict[str, list[str]] = {}
        for agent, ivs in intervals.items():
            for is_, ie, loc in ivs:
                if is_ <= s and e <= ie:
                    by_band.setdefault(loc, []).append(agent)
                    break
        cur_pos: dict[str, tuple[int, int]] = {}
        for loc in sorted(by_band):
            active = [ar for ar in areas
                      if ar.location == loc and ar.start < e and s < ar.end]
            units = _cluster_units(by_band[loc], active)
            order = _reduce_crossings(units, prev_pos, band_index[loc])
            y0 = band_index[loc] * BAND_HEIGHT
            for lane, agent in enumerate(order):
                cur_pos[agent] = (band_index[loc], lane)
                y = y0 + LANE_MARGIN + lane * LANE_STEP
                pts = points[agent]
                if not pts or pts[-1] != (s, y):
                    pts.append((s, y))
                pts.append((e, y))
        prev_pos = cur_pos

    curves = tuple(AgentCurve(agent, tuple(_coalesce(points[agent])))
                   for agent in selected)

    markers: list[dict] = []
    for agent in selected:
        result = (segmentations or {}).get(agent)
        if result is None:
            continue
        for seg in result.segments:
            markers.append({"agent": agent, "start": seg.start, "end": seg.end,
                            "emoji": seg.emoji or "",
                            "description": seg.description or ""})
    markers.sort(key=lambda m: (m["agent"], m["start"]))

    mem = tuple(
        {"agent": h.agent, "t": h.time, "opIndex": h.op_index, "score": h.score}
        for h in sorted(highlights, key=lambda h: (h.time, h.agent, h.op_index))
        if h.agent in set(selected) and a <= h.time < b)

    return OutlineLayout(range=(a, b), bands=bands, curves=curves,
                         interaction_areas=tuple(areas),
                         segment_markers=tuple(markers),
                         memory_highlights=mem)


def _coalesce(pts: list[tuple[int, float]]) -> list[tuple[int, float]]:
    """Drop interior points that continue a straight horizontal run."""
    out: list[tuple[int, float]] = []
    for p in pts:
        if len(out) >= 2 and out[-1][1] == out[-2][1] == p[1]:
            out[-1] = p
        else:
            out.append(p)
    return out
