"""Converter for generative-agents simulation snapshots.

Expected directory shape (a single simulation run):

    <dir>/reverie/meta.json        persona_names, start_date, sec_per_step
    <dir>/movement/<step>.json     per-step positions and activity strings
    <dir>/personas/<name>/bootstrap_memory/scratch.json            (optional)
    <dir>/personas/<name>/bootstrap_memory/associative_memory/nodes.json

Movement descriptions become agent states (one per step) plus an
environment-kind operation whenever the activity string changes. Memory
nodes map by type: event and chat nodes become memory operations, thought
nodes become decision operations; a thought's `filling` list becomes
explicit cause references where the referenced node resolves to a strictly
earlier operation of the same agent. Node timestamps convert to ticks via
floor((created - start) / sec_per_step).
"""

from __future__ import annotations

import json
import re
from datetime import datetime
from pathlib import Path

_TS_FORMAT = "%B %d, %Y, %H:%M:%S"
_DATE_FORMAT = "%B %d, %Y"

_NODE_KINDS = {
    "event": ("perceive", "memory"),
    "chat": ("act", "memory"),
    "thought": ("think", "decision"),
}


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")
    return slug or "agent"


def _parse_created(value: str) -> datetime | None:
    for fmt in (_TS_FORMAT, _DATE_FORMAT):
        try:
            return datetime.strptime(value, fmt)
        except ValueError:
            continue
    return None


def _location_of(description: str) -> str:
    """Sector-level location slug from an activity string like
    'sleeping @ the Ville:Isabella Rodriguez's apartment:main room:bed'."""
    if "@" not in description:
        return "unknown"
    path = description.split("@", 1)[1].strip()
    parts = [p.strip() for p in path.split(":") if p.strip()]
    if not parts:
        return "unknown"
    sector = parts[1] if len(parts) > 1 else parts[0]
    return slugify(sector)


def _activity_of(description: str) -> str:
    return description.split("@", 1)[0].strip()


def _load_meta(root: Path) -> dict:
    for candidate in (root / "reverie" / "meta.json", root / "meta.json"):
        if candidate.is_file():
            return json.loads(candidate.read_text(encoding="utf-8"))
    raise ValueError(
        f"unrecognized simulation directory layout: no meta.json under {root}")


def _movement_steps(root: Path) -> list[tuple[int, dict]]:
    moves_dir = root / "movement"
    steps: list[tuple[int, dict]] = []
    if not moves_dir.is_dir():
        return steps
    for path in moves_dir.glob("*.json"):
        try:
            step = int(path.stem)
        except ValueError:
            continue
        steps.append((step, json.loads(path.read_text(encoding="utf-8"))))
    steps.sort(key=lambda pair: pair[0])
    return steps


def _persona_dir(root: Path, name: str) -> Path:
    return root / "personas" / name / "bootstrap_memory"


def _load_nodes(root: Path, name: str) -> list[dict]:
    path = _persona_dir(root, name) / "associative_memory" / "nodes.json"
    if not path.is_file():
        return []
    raw = json.loads(path.read_text(encoding="utf-8"))
    nodes = []
    for key, node in raw.items():
        count = node.get("node_count")
        if count is None:
            match = re.search(r"(\d+)$", key)
            count = int(match.group(1)) if match else 0
        nodes.append({**node, "_key": key, "_count": int(count)})
    nodes.sort(key=lambda n: n["_count"])
    return nodes


def _innate_traits(root: Path, name: str) -> str:
    path = _persona_dir(root, name) / "scratch.json"
    if not path.is_file():
        return ""
    try:
        scratch = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return ""
    return str(scratch.get("innate") or "")


def convert_reverie_dir(root: Path | str) -> str:
    """Render a simulation snapshot directory as native JSONL text."""
    root = Path(root)
    meta = _load_meta(root)
    names = list(meta.get("persona_names") or [])
    if not names:
        raise ValueError("meta.json declares no persona_names")
    sec_per_step = int(meta.get("sec_per_step") or 10)
    start_date = str(meta.get("start_date") or "")
    start = _parse_created(start_date) if start_date else None

    ids = {name: slugify(name) for name in names}

    steps = _movement_steps(root)
    locations: dict[str, list[float]] = {}
    states: list[dict] = []
    proto_ops: list[dict] = []
    last_activity: dict[str, str] = {}
    action_counter: dict[str, int] = {}

    def note_location(loc: str, pos: tuple[float, float] | None) -> None:
        box = locations.setdefault(loc, [0.0, 0.0, 1.0, 1.0] if pos is None
                                   else [pos[0], pos[1], pos[0], pos[1]])
        if pos is not None:
            box[0] = min(box[0], pos[0])
            box[1] = min(box[1], pos[1])
            box[2] = max(box[2], pos[0])
            box[3] = max(box[3], pos[1])

    for step, payload in steps:
        personas = payload.get("persona") or {}
        for name in names:
            entry = personas.get(name)
            if not entry:
                continue
            description = str(entry.get("description") or "")
            loc = _location_of(description)
            movement = entry.get("movement")
            pos = None
            if isinstance(movement, (list, tuple)) and len(movement) == 2:
                pos = (float(movement[0]), float(movement[1]))
            note_location(loc, pos)
            state = {"type": "state", "t": step, "agent": ids[name],
                     "location": loc}
            if pos is not None:
                state["position"] = [pos[0], pos[1]]
            if description:
                state["attrs"] = {"description": description}
            states.append(state)
            activity = _activity_of(description)
            if activity and activity != last_activity.get(name):
                last_activity[name] = activity
                idx = action_counter.get(name, 0)
                action_counter[name] = idx + 1
                proto_ops.append({
                    "t": step, "agent": ids[name], "order": (0, idx),
                    "task_id": f"{ids[name]}-action-{idx}",
                    "task_kind": "act", "op_kind": "environment",
                    "text": activity, "node_key": None, "filling": [],
                })

    node_keys_seen = False
    for name in names:
        for node in _load_nodes(root, name):
            node_keys_seen = True
            created = _parse_created(str(node.get("created") or ""))
            if created is not None and start is not None:
                tick = int((created - start).total_seconds() // sec_per_step)
                tick = max(tick, 0)
            else:
                tick = 0
            kind = str(node.get("type") or "event")
            task_kind, op_kind = _NODE_KINDS.get(kind, ("perceive", "memory"))
            proto_ops.append({
                "t": tick, "agent": ids[name], "order": (1, node["_count"]),
                "task_id": f"{ids[name]}-{kind}-{node['_count']}",
                "task_kind": task_kind, "op_kind": op_kind,
                "text": str(node.get("description") or node["_key"]),
                "node_key": node["_key"],
                "filling": list(node.get("filling") or []),
            })

    if not steps and not node_keys_seen:
        raise ValueError(
            f"unrecognized simulation directory layout: no movement steps or "
            f"memory nodes under {root}")

    proto_ops.sort(key=lambda p: (p["agent"], p["t"], p["order"]))
    per_cell: dict[tuple[int, str], int] = {}
    node_refs: dict[tuple[str, str], tuple[int, int]] = {}
    for op in proto_ops:
        cell = (op["t"], op["agent"])
        op["op_index"] = per_cell.get(cell, 0)
        per_cell[cell] = op["op_index"] + 1
        if op["node_key"] is not None:
            node_refs[(op["agent"], op["node_key"])] = (op["t"], op["op_index"])

    ops: list[dict] = []
    for op in proto_ops:
        record = {"type": "op", "t": op["t"], "agent": op["agent"],
                  "task_id": op["task_id"], "task_kind": op["task_kind"],
                  "op_index": op["op_index"], "op_kind": op["op_kind"],
                  "text": op["text"]}
        causes = []
        for entry in op["filling"]:
            key = entry if isinstance(entry, str) else f"node_{entry}"
            ref = node_refs.get((op["agent"], key))
            if ref is None:
                continue
            rt, ri = ref
            if (rt, ri) < (op["t"], op["op_index"]):
                causes.append({"t": rt, "agent": op["agent"], "op_index": ri})
        if causes:
            record["causes"] = causes
        ops.append(record)

    meta_record = {
        "type": "meta",
        "version": 1,
        "agents": [
            {"id": ids[name], "name": name,
             "characteristics": _innate_traits(root, name)}
            for name in names
        ],
        "locations": [
            {"id": loc, "name": loc.replace("_", " "),
             "bounds": [box[0] - 1.0, box[1] - 1.0, box[2] + 1.0, box[3] + 1.0]}
            for loc, box in sorted(locations.items())
        ],
    }

    env = {"type": "env", "t": 0, "attrs": {}}
    if start_date:
        env["attrs"]["start_date"] = start_date

    type_rank = {"env": 0, "state": 1, "op": 2}
    body = [env] + states + ops
    body.sort(key=lambda r: (r["t"], type_rank[r["type"]],
                             r.get("agent", ""), r.get("op_index", 0)))
    lines = [json.dumps(meta_record, ensure_ascii=False, sort_keys=True)]
    lines.extend(json.dumps(rec, ensure_ascii=False, sort_keys=True)
                 for rec in body)
    return "\n".join(lines) + "\n"
