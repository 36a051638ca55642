"""Strict parser for the native JSONL log format.

One record per UTF-8 line. The first record must be the single `meta` record;
`state`, `env`, and `op` records may then appear in any order. Parsing is
strict: every malformed line is reported with its line number and an error
code, never silently skipped. A Timeline is returned only when the error list
is empty.

Error codes:
  E_JSON    line is not a JSON object
  E_META    meta record missing, duplicated, or not first
  E_SCHEMA  wrong field type, missing field, or unsupported version
  E_ENUM    token outside a closed enumeration
  E_RANGE   numeric value out of range (negative tick, inverted bounds)
  E_REF     undeclared agent/location, or cause ref that does not resolve
            to a strictly preceding operation
  E_DUP     duplicate record key

Warning codes:
  W_INIT    no environment state at tick 0, or an agent without an initial
            state record at tick 0
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .model import (
    AgentCharacteristic,
    AgentState,
    EnvironmentState,
    LocationInfo,
    Operation,
    OperationKind,
    OperationRef,
    ProjectMeta,
    TaskKind,
    Timeline,
)

__all__ = ["ValidationIssue", "ValidationReport", "parse_log", "serialize_timeline"]

_META_KEYS = {"type", "version", "agents", "locations", "time_unit"}
_STATE_KEYS = {"type", "t", "agent", "location", "position", "attrs"}
_ENV_KEYS = {"type", "t", "attrs"}
_OP_KEYS = {
    "type", "t", "agent", "task_id", "task_kind", "op_index", "op_kind",
    "text", "causes", "prompt", "response",
}


@dataclass(frozen=True)
class ValidationIssue:
    line: int
    code: str
    message: str


@dataclass
class ValidationReport:
    errors: list[ValidationIssue] = field(default_factory=list)
    warnings: list[ValidationIssue] = field(default_factory=list)
    records: dict[str, int] = field(default_factory=dict)
    ops_per_agent: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, line: int, code: str, message: str) -> None:
        self.errors.append(ValidationIssue(line, code, message))

    def warn(self, line: int, code: str, message: str) -> None:
        self.warnings.append(ValidationIssue(line, code, message))


def _iter_lines(stream: IO[bytes] | IO[str] | bytes | str | Iterable[str]) -> Iterator[str]:
    if isinstance(stream, bytes):
        yield from stream.decode("utf-8").splitlines()
    elif isinstance(stream, str):
        yield from stream.splitlines()
    elif isinstance(stream, io.TextIOBase):
        for line in stream:
            yield line.rstrip("\n")
    else:
        for line in stream:
            if isinstance(line, bytes):
                yield line.decode("utf-8").rstrip("\n")
            else:
                yield line.rstrip("\n")


def _is_num(v: object) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_tick(v: object) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _str_field(body: dict, key: str, rep: ValidationReport, line: int,
               required: bool = True, allow_empty: bool = False) -> str | None:
    v = body.get(key)
    if v is None:
        if required:
            rep.error(line, "E_SCHEMA", f"missing field {key!r}")
        return None
    if not isinstance(v, str) or (not allow_empty and not v):
        rep.error(line, "E_SCHEMA", f"field {key!r} must be a non-empty string")
        return None
    return v


def _attrs_field(body: dict, rep: ValidationReport, line: int) -> dict[str, str] | None:
    v = body.get("attrs", {})
    if not isinstance(v, dict):
        rep.error(line, "E_SCHEMA", "field 'attrs' must be an object")
        return None
    out: dict[str, str] = {}
    for k, val in v.items():
        if not isinstance(val, str):
            rep.error(line, "E_SCHEMA", f"attrs[{k!r}] must be a string")
            return None
        out[k] = val
    return out


def _extra_of(body: dict, known: set[str]) -> dict[str, object]:
    return {k: v for k, v in body.items() if k not in known}


def _parse_meta(body: dict, rep: ValidationReport, line: int) -> ProjectMeta | None:
    version = body.get("version")
    if version != 1:
        rep.error(line, "E_SCHEMA", f"unsupported log version {version!r}")
        return None
    raw_agents = body.get("agents")
    raw_locations = body.get("locations")
    if not isinstance(raw_agents, list) or not raw_agents:
        rep.error(line, "E_SCHEMA", "meta must declare a non-empty 'agents' list")
        return None
    if not isinstance(raw_locations, list):
        rep.error(line, "E_SCHEMA", "meta must declare a 'locations' list")
        return None
    agents: list[AgentCharacteristic] = []
    seen_agents: set[str] = set()
    for entry in raw_agents:
        if not isinstance(entry, dict):
            rep.error(line, "E_SCHEMA", "agent entry must be an object")
            return None
        aid = entry.get("id")
        if not isinstance(aid, str) or not aid:
            rep.error(line, "E_SCHEMA", "agent entry missing string 'id'")
            return None
        if aid in seen_agents:
            rep.error(line, "E_DUP", f"duplicate agent id {aid!r}")
            return None
        seen_agents.add(aid)
        name = entry.get("name", aid)
        chars = entry.get("characteristics", "")
        if not isinstance(name, str) or not isinstance(chars, str):
            rep.error(line, "E_SCHEMA", f"agent {aid!r}: 'name' and 'characteristics' must be strings")
            return None
        agents.append(AgentCharacteristic(agent=aid, name=name, description=chars))
    locations: list[LocationInfo] = []
    seen_locs: set[str] = set()
    for entry in raw_locations:
        if not isinstance(entry, dict):
            rep.error(line, "E_SCHEMA", "location entry must be an object")
            return None
        lid = entry.get("id")
        if not isinstance(lid, str) or not lid:
            rep.error(line, "E_SCHEMA", "location entry missing string 'id'")
            return None
        if lid in seen_locs:
            rep.error(line, "E_DUP", f"duplicate location id {lid!r}")
            return None
        seen_locs.add(lid)
        name = entry.get("name", lid)
        bounds = entry.get("bounds")
        if not isinstance(name, str):
            rep.error(line, "E_SCHEMA", f"location {lid!r}: 'name' must be a string")
            return None
        if (not isinstance(bounds, list) or len(bounds) != 4
                or not all(_is_num(b) for b in bounds)):
            rep.error(line, "E_SCHEMA", f"location {lid!r}: 'bounds' must be [x0,y0,x1,y1]")
            return None
        x0, y0, x1, y1 = (float(b) for b in bounds)
        if x0 > x1 or y0 > y1:
            rep.error(line, "E_RANGE", f"location {lid!r}: inverted bounds")
            return None
        locations.append(LocationInfo(location=lid, name=name, bounds=(x0, y0, x1, y1)))
    time_unit = body.get("time_unit")
    if time_unit is not None and not isinstance(time_unit, str):
        rep.error(line, "E_SCHEMA", "'time_unit' must be a string")
        return None
    return ProjectMeta(
        version=1,
        agents=tuple(agents),
        locations=tuple(locations),
        time_unit=time_unit,
        extra=_extra_of(body, _META_KEYS),
    )


def parse_log(
    stream: IO[bytes] | IO[str] | bytes | str | Iterable[str],
) -> tuple[Timeline | None, ValidationReport]:
    """Parse a native-format JSONL stream into a Timeline.

    Returns (timeline, report). The timeline is None exactly when
    report.errors is non-empty. The report lists every rejected line.
    """
    rep = ValidationReport()
    meta: ProjectMeta | None = None
    meta_seen = False
    env_states: dict[int, EnvironmentState] = {}
    agent_states: dict[tuple[int, str], AgentState] = {}
    ops: dict[tuple[int, str], dict[int, Operation]] = {}
    # (line, op, raw cause list) kept for the referential pass after all
    # operations are known.
    pending_causes: list[tuple[int, Operation, list[dict]]] = []

    n_lines = 0
    for lineno, raw in enumerate(_iter_lines(stream), start=1):
        n_lines = lineno
        if not raw.strip():
            rep.error(lineno, "E_JSON", "blank line")
            continue
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as exc:
            rep.error(lineno, "E_JSON", f"invalid JSON: {exc.msg}")
            continue
        if not isinstance(body, dict):
            rep.error(lineno, "E_JSON", "record must be a JSON object")
            continue
        rtype = body.get("type")
        if rtype not in ("meta", "state", "env", "op"):
            rep.error(lineno, "E_SCHEMA", f"unknown record type {rtype!r}")
            continue
        rep.records[rtype] = rep.records.get(rtype, 0) + 1

        if rtype == "meta":
            if meta_seen:
                rep.error(lineno, "E_META", "duplicate meta record")
                continue
            meta_seen = True
            if lineno != 1:
                rep.error(lineno, "E_META", "meta record must be the first line")
            meta = _parse_meta(body, rep, lineno)
            continue
        if lineno == 1:
            rep.error(lineno, "E_META", "first record must be the meta record")

        t = body.get("t")
        if not _is_tick(t):
            rep.error(lineno, "E_SCHEMA", "field 't' must be an integer")
            continue
        if t < 0:
            rep.error(lineno, "E_RANGE", f"negative tick {t}")
            continue

        if rtype == "env":
            attrs = _attrs_field(body, rep, lineno)
            if attrs is None:
                continue
            if t in env_states:
                rep.error(lineno, "E_DUP", f"duplicate env state at t={t}")
                continue
            env_states[t] = EnvironmentState(time=t, attrs=attrs, extra=_extra_of(body, _ENV_KEYS))
            continue

        agent = _str_field(body, "agent", rep, lineno)
        if agent is None:
            continue
        if meta is not None and agent not in meta.agent_ids():
            rep.error(lineno, "E_REF", f"undeclared agent {agent!r}")
            continue

        if rtype == "state":
            location = _str_field(body, "location", rep, lineno)
            if location is None:
                continue
            if meta is not None and location not in meta.location_ids():
                rep.error(lineno, "E_REF", f"undeclared location {location!r}")
                continue
            position: tuple[float, float] | None = None
            raw_pos = body.get("position")
            if raw_pos is not None:
                if (not isinstance(raw_pos, list) or len(raw_pos) != 2
                        or not all(_is_num(p) for p in raw_pos)):
                    rep.error(lineno, "E_SCHEMA", "'position' must be [x, y]")
                    continue
                position = (float(raw_pos[0]), float(raw_pos[1]))
            attrs = _attrs_field(body, rep, lineno)
            if attrs is None:
                continue
            if (t, agent) in agent_states:
                rep.error(lineno, "E_DUP", f"duplicate state for ({t}, {agent!r})")
                continue
            agent_states[(t, agent)] = AgentState(
                time=t, agent=agent, location=location, position=position,
                attrs=attrs, extra=_extra_of(body, _STATE_KEYS),
            )
            continue

        # op record
        task_id = _str_field(body, "task_id", rep, lineno)
        if task_id is None:
            continue
        raw_tk = body.get("task_kind")
        try:
            task_kind = TaskKind(raw_tk)
        except ValueError:
            rep.error(lineno, "E_ENUM", f"unknown task_kind {raw_tk!r}")
            continue
        raw_ok = body.get("op_kind")
        try:
            op_kind = OperationKind(raw_ok)
        except ValueError:
            rep.error(lineno, "E_ENUM", f"unknown op_kind {raw_ok!r}")
            continue
        op_index = body.get("op_index")
        if not _is_tick(op_index):
            rep.error(lineno, "E_SCHEMA", "field 'op_index' must be an integer")
            continue
        if op_index < 0:
            rep.error(lineno, "E_RANGE", f"negative op_index {op_index}")
            continue
        text = _str_field(body, "text", rep, lineno, allow_empty=True)
        if text is None:
            continue
        prompt = body.get("prompt")
        response = body.get("response")
        if prompt is not None and not isinstance(prompt, str):
            rep.error(lineno, "E_SCHEMA", "'prompt' must be a string")
            continue
        if response is not None and not isinstance(response, str):
            rep.error(lineno, "E_SCHEMA", "'response' must be a string")
            continue
        if (prompt is not None or response is not None) and op_kind is not OperationKind.DECISION:
            rep.error(lineno, "E_SCHEMA", "prompt/response are only valid on decision operations")
            continue
        raw_causes = body.get("causes", [])
        if not isinstance(raw_causes, list):
            rep.error(lineno, "E_SCHEMA", "'causes' must be a list")
            continue
        cause_bodies: list[dict] = []
        bad_cause = False
        for c in raw_causes:
            if (not isinstance(c, dict) or not _is_tick(c.get("t"))
                    or not isinstance(c.get("agent"), str)
                    or not _is_tick(c.get("op_index"))):
                rep.error(lineno, "E_SCHEMA", "cause entries must be {t, agent, op_index}")
                bad_cause = True
                break
            cause_bodies.append(c)
        if bad_cause:
            continue
        cell = ops.setdefault((t, agent), {})
        if op_index in cell:
            rep.error(lineno, "E_DUP", f"duplicate operation ({t}, {agent!r}, {op_index})")
            continue
        op = Operation(
            time=t, agent=agent, task_id=task_id, task_kind=task_kind,
            op_index=op_index, kind=op_kind, text=text,
            prompt=prompt, response=response,
            explicit_causes=(),
            extra=_extra_of(body, _OP_KEYS),
        )
        cell[op_index] = op
        pending_causes.append((lineno, op, cause_bodies))

    if not meta_seen:
        rep.error(max(n_lines, 1), "E_META", "missing meta record")

    # Referential pass: causes must name existing operations that strictly
    # precede the referencing one.
    all_refs = {
        OperationRef(t, a, i)
        for (t, a), cell in ops.items()
        for i in cell
    }
    resolved: dict[OperationRef, tuple[OperationRef, ...]] = {}
    for lineno, op, cause_bodies in pending_causes:
        refs: list[OperationRef] = []
        ok = True
        for c in cause_bodies:
            ref = OperationRef(time=c["t"], agent=c["agent"], op_index=c["op_index"])
            if ref not in all_refs:
                rep.error(lineno, "E_REF", f"cause ({ref.time}, {ref.agent!r}, {ref.op_index}) does not exist")
                ok = False
                continue
            if not ref.strictly_precedes(op.ref):
                rep.error(lineno, "E_REF", f"cause ({ref.time}, {ref.agent!r}, {ref.op_index}) does not precede the operation")
                ok = False
                continue
            refs.append(ref)
        if ok and refs:
            resolved[op.ref] = tuple(refs)

    if rep.errors:
        return None, rep
    assert meta is not None

    operations: dict[tuple[int, str], tuple[Operation, ...]] = {}
    for key, cell in ops.items():
        row = []
        for i in sorted(cell):
            op = cell[i]
            causes = resolved.get(op.ref)
            if causes:
                op = Operation(
                    time=op.time, agent=op.agent, task_id=op.task_id,
                    task_kind=op.task_kind, op_index=op.op_index, kind=op.kind,
                    text=op.text, prompt=op.prompt, response=op.response,
                    explicit_causes=causes, extra=op.extra,
                )
            row.append(op)
            rep.ops_per_agent[op.agent] = rep.ops_per_agent.get(op.agent, 0) + 1
        operations[key] = tuple(row)

    if 0 not in env_states:
        rep.warn(0, "W_INIT", "no environment state at tick 0")
    for aid in meta.agent_ids():
        if (0, aid) not in agent_states:
            rep.warn(0, "W_INIT", f"agent {aid!r} has no state record at tick 0")

    timeline = Timeline(meta=meta, env_states=env_states,
                        agent_states=agent_states, operations=operations)
    return timeline, rep


def _meta_record(meta: ProjectMeta) -> dict:
    body: dict[str, object] = {
        "type": "meta",
        "version": meta.version,
        "agents": [
            {"id": a.agent, "name": a.name, "characteristics": a.description}
            for a in meta.agents
        ],
        "locations": [
            {"id": l.location, "name": l.name, "bounds": list(l.bounds)}
            for l in meta.locations
        ],
    }
    if meta.time_unit is not None:
        body["time_unit"] = meta.time_unit
    body.update(meta.extra)
    return body


def serialize_timeline(timeline: Timeline) -> Iterator[str]:
    """Emit the timeline as native JSONL lines (meta first, then records in
    deterministic key order). parse_log over the output reproduces the
    timeline field for field."""
    yield json.dumps(_meta_record(timeline.meta), ensure_ascii=False, sort_keys=True)
    for env in timeline.iter_env_states():
        body: dict[str, object] = {"type": "env", "t": env.time, "attrs": dict(env.attrs)}
        body.update(env.extra)
        yield json.dumps(body, ensure_ascii=False, sort_keys=True)
    for st in timeline.iter_agent_states():
        body = {"type": "state", "t": st.time, "agent": st.agent, "location": st.location}
        if st.position is not None:
            body["position"] = list(st.position)
        if st.attrs:
            body["attrs"] = dict(st.attrs)
        body.update(st.extra)
        yield json.dumps(body, ensure_ascii=False, sort_keys=True)
    for op in timeline.iter_operations():
        body = {
            "type": "op", "t": op.time, "agent": op.agent,
            "task_id": op.task_id, "task_kind": op.task_kind.value,
            "op_index": op.op_index, "op_kind": op.kind.value, "text": op.text,
        }
        if op.prompt is not None:
            body["prompt"] = op.prompt
        if op.response is not None:
            body["response"] = op.response
        if op.explicit_causes:
            body["causes"] = [
                {"t": r.time, "agent": r.agent, "op_index": r.op_index}
                for r in op.explicit_causes
            ]
        body.update(op.extra)
        yield json.dumps(body, ensure_ascii=False, sort_keys=True)
