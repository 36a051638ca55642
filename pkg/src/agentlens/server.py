"""HTTP API over project directories.

Read endpoints never call a text provider: each project's engine runs in
offline mode, serving cached summaries and embeddings with deterministic
fallbacks for anything uncached. Long provider-backed runs belong to the
CLI pipeline. Response bodies are rendered through one canonical JSON
encoder, so repeated GETs on an unchanged project are byte-identical.
"""

from __future__ import annotations

import hashlib
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel

from .causes import (
    DEFAULT_DELTA,
    SCOPES,
    edge_payload,
    explicit_causes,
    implicit_causes,
    ref_payload,
)
from .layout import compute_outline_layout
from .model import InvalidIntervalError, OperationRef, Timeline
from .pipeline import build_embedding_sequence
from .project import (
    LogValidationError,
    Project,
    ProjectError,
    canonical_json,
    ingest_text,
)
from .providers import ProviderConfig
from .search import DEFAULT_THRESHOLD, EmbeddingsNotBuiltError, memory_search
from .segment import pca_first_component
from .summarize import SummaryEngine

DEFAULT_PORT = 8321


class IngestRequest(BaseModel):
    logPath: str


def _json_response(payload, status_code: int = 200) -> Response:
    return Response(content=canonical_json(payload) + "\n",
                    media_type="application/json", status_code=status_code)


class _Registry:
    """Projects under one root directory, each with an offline engine."""

    def __init__(self, root: Path):
        self.root = root
        self._lock = threading.Lock()
        self._open: dict[str, tuple[Project, SummaryEngine]] = {}

    def add(self, project: Project) -> None:
        with self._lock:
            if project.project_id not in self._open:
                engine = project.engine(ProviderConfig(offline=True))
                self._open[project.project_id] = (project, engine)

    def get(self, project_id: str) -> tuple[Project, SummaryEngine]:
        with self._lock:
            if project_id in self._open:
                return self._open[project_id]
        candidate = self.root / project_id
        try:
            project = Project(candidate)
        except (ProjectError, FileNotFoundError):
            raise HTTPException(status_code=404,
                                detail=f"unknown project {project_id!r}")
        self.add(project)
        return self._open[project_id]

    def ingest(self, source: Path) -> Project:
        with self._lock:
            if source.is_dir():
                from .reverie import convert_reverie_dir

                text = convert_reverie_dir(source)
            else:
                text = source.read_text(encoding="utf-8")
            digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
            final = self.root / digest[:12]
            if (final / "project.json").is_file():
                return Project(final)
            return ingest_text(text, final)


def create_app(projects_root: Path | str,
               initial: Project | None = None) -> FastAPI:
    root = Path(projects_root)
    root.mkdir(parents=True, exist_ok=True)
    registry = _Registry(root)
    if initial is not None:
        registry.add(initial)

    app = FastAPI(title="agentlens", docs_url=None, redoc_url=None)
    app.state.registry = registry

    def full_range(timeline: Timeline) -> tuple[int, int]:
        t0, t1 = timeline.time_bounds
        return t0, t1 + 1

    def checked_range(timeline: Timeline, from_: int | None,
                      to: int | None) -> tuple[int, int]:
        a, b = full_range(timeline)
        if from_ is not None:
            a = from_
        if to is not None:
            b = to
        if a >= b:
            raise HTTPException(status_code=400,
                                detail=f"empty time range [{a}, {b})")
        return a, b

    def get_agent(timeline: Timeline, aid: str) -> str:
        if aid not in timeline.meta.agent_ids():
            raise HTTPException(status_code=404, detail=f"unknown agent {aid!r}")
        return aid

    def get_op(timeline: Timeline, t: int, aid: str, op_index: int):
        get_agent(timeline, aid)
        ref = OperationRef(t, aid, op_index)
        if not timeline.has_operation(ref):
            raise HTTPException(status_code=404,
                                detail=f"no operation at ({t}, {aid}, {op_index})")
        return timeline.operation(ref)

    @app.post("/projects")
    def create_project(body: IngestRequest):
        source = Path(body.logPath)
        if not source.exists():
            raise HTTPException(status_code=400,
                                detail=f"log path {body.logPath!r} does not exist")
        try:
            project = registry.ingest(source)
        except LogValidationError as exc:
            issues = [{"line": i.line, "code": i.code, "message": i.message}
                      for i in exc.report.errors]
            return _json_response(
                {"detail": "log failed validation", "issues": issues}, 400)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        registry.add(project)
        return _json_response({"projectId": project.project_id})

    @app.get("/projects/{pid}/agents")
    def list_agents(pid: str):
        project, _ = registry.get(pid)
        payload = [
            {"agent": c.agent, "name": c.name, "characteristics": c.description}
            for c in project.timeline.meta.agents
        ]
        return _json_response(payload)

    @app.get("/projects/{pid}/outline")
    def outline(pid: str,
                from_: int | None = Query(default=None, alias="from"),
                to: int | None = None,
                agents: str | None = None,
                n: int = 10,
                q: str | None = None):
        project, engine = registry.get(pid)
        timeline = project.timeline
        a, b = checked_range(timeline, from_, to)
        if agents:
            selected = tuple(s for s in agents.split(",") if s)
        else:
            selected = timeline.meta.agent_ids()
        if n < 1:
            raise HTTPException(status_code=400, detail="n must be >= 1")
        segmentations = {}
        for agent in selected:
            if agent not in timeline.meta.agent_ids():
                raise HTTPException(status_code=404,
                                    detail=f"unknown agent {agent!r}")
            try:
                segmentations[agent] = project.segmentation(
                    engine, agent, (a, b), n)
            except ValueError:
                continue
        highlights = memory_search(timeline, q) if q else ()
        try:
            layout = compute_outline_layout(
                timeline, (a, b), selected,
                segmentations=segmentations, highlights=highlights)
        except (InvalidIntervalError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        payload = layout.to_payload()
        payload["n"] = n
        return _json_response(payload)

    @app.get("/projects/{pid}/agents/{aid}/timeline")
    def agent_timeline(pid: str, aid: str,
                       from_: int | None = Query(default=None, alias="from"),
                       to: int | None = None):
        project, _ = registry.get(pid)
        timeline = project.timeline
        get_agent(timeline, aid)
        a, b = checked_range(timeline, from_, to)
        points = []
        for t in timeline.op_times(aid):
            if not a <= t < b:
                continue
            tasks: list[dict] = []
            index: dict[str, dict] = {}
            for op in timeline.operations_at(t, aid):
                task = index.get(op.task_id)
                if task is None:
                    task = {"taskId": op.task_id,
                            "taskKind": op.task_kind.value,
                            "operations": []}
                    index[op.task_id] = task
                    tasks.append(task)
                task["operations"].append({
                    "opIndex": op.op_index,
                    "opKind": op.kind.value,
                    "text": op.text,
                    "hasPrompt": op.prompt is not None,
                    "causeCount": len(op.explicit_causes),
                })
            points.append({"t": t, "tasks": tasks})
        return _json_response({"agent": aid, "range": [a, b], "points": points})

    @app.get("/projects/{pid}/operations/{t}/{aid}/{op_index}")
    def operation_detail(pid: str, t: int, aid: str, op_index: int):
        project, _ = registry.get(pid)
        op = get_op(project.timeline, t, aid, op_index)
        return _json_response({
            "t": op.time, "agent": op.agent, "opIndex": op.op_index,
            "taskId": op.task_id, "taskKind": op.task_kind.value,
            "opKind": op.kind.value, "text": op.text,
            "prompt": op.prompt, "response": op.response,
            "explicitCauses": [ref_payload(r) for r in op.explicit_causes],
        })

    @app.get("/projects/{pid}/operations/{t}/{aid}/{op_index}/causes")
    def operation_causes(pid: str, t: int, aid: str, op_index: int,
                         delta: float = DEFAULT_DELTA,
                         scope: str = "sameAgent"):
        project, engine = registry.get(pid)
        timeline = project.timeline
        op = get_op(timeline, t, aid, op_index)
        if scope not in SCOPES:
            raise HTTPException(status_code=400,
                                detail=f"scope must be one of {sorted(SCOPES)}")
        try:
            implicit = implicit_causes(timeline, engine, op.ref,
                                       delta=delta, scope=scope)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        explicit = explicit_causes(timeline, op.ref)
        return _json_response({
            "explicit": [edge_payload(e) for e in explicit],
            "implicit": [edge_payload(e) for e in implicit],
        })

    @app.get("/projects/{pid}/search")
    def search(pid: str, q: str, mode: str = "lexical",
               threshold: float = DEFAULT_THRESHOLD):
        project, engine = registry.get(pid)
        try:
            hits = memory_search(project.timeline, q, mode=mode,
                                 threshold=threshold, engine=engine)
        except EmbeddingsNotBuiltError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        payload = [
            {"agent": h.agent, "t": h.time, "opIndex": h.op_index,
             "score": round(h.score, 9), "mode": h.mode}
            for h in hits
        ]
        return _json_response(payload)

    @app.get("/projects/{pid}/monitor")
    def monitor(pid: str, t: int, focus: str | None = None):
        project, _ = registry.get(pid)
        timeline = project.timeline
        t0, t1 = timeline.time_bounds
        if not t0 <= t <= t1:
            raise HTTPException(status_code=400,
                                detail=f"t={t} outside [{t0}, {t1}]")
        agents = []
        for aid in timeline.meta.agent_ids():
            state = timeline.last_agent_state(t, aid)
            if state is None:
                continue
            agents.append({
                "agent": aid, "location": state.location,
                "position": list(state.position) if state.position else None,
            })
        map_meta = {"locations": [
            {"location": info.location, "name": info.name,
             "bounds": list(info.bounds)}
            for info in timeline.meta.locations
        ]}
        focus_payload = None
        if focus is not None:
            get_agent(timeline, focus)
            state = timeline.last_agent_state(t, focus)
            if state is None:
                raise HTTPException(status_code=400,
                                    detail=f"agent {focus!r} has no state at t={t}")
            info = timeline.meta.location_info(state.location)
            focus_payload = {"agent": focus, "location": state.location,
                             "bounds": list(info.bounds)}
        return _json_response({"t": t, "agents": agents,
                               "mapMeta": map_meta, "focus": focus_payload})

    @app.get("/projects/{pid}/agents/{aid}/pca")
    def agent_pca(pid: str, aid: str,
                  from_: int | None = Query(default=None, alias="from"),
                  to: int | None = None):
        project, engine = registry.get(pid)
        timeline = project.timeline
        get_agent(timeline, aid)
        a, b = checked_range(timeline, from_, to)
        try:
            seq, _behaviors = build_embedding_sequence(
                timeline, engine, aid, (a, b))
            values = pca_first_component(seq)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _json_response({
            "agent": aid, "range": [a, b],
            "times": list(seq.times),
            "values": [round(float(v), 9) for v in values],
        })

    return app


def serve(projects_root: Path | str, port: int = DEFAULT_PORT,
          host: str = "127.0.0.1", initial: Project | None = None) -> None:
    import uvicorn

    app = create_app(projects_root, initial=initial)
    uvicorn.run(app, host=host, port=port, log_level="warning")
