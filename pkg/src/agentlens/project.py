"""On-disk project store.

A project is a flat directory:

    project.json                 {"version": 1, "id": ..., "source_digest": ...}
    log.jsonl                    normalized copy of the ingested log
    cache/summaries/<hash>.json
    cache/embeddings/<hash>.npy
    cache/segmentations/<key>.json
    cache/layouts/<key>.json
    .lock                        held by CLI commands (one at a time)

The id is the first 12 hex chars of the sha256 of log.jsonl, so ingesting
the same log twice lands on the same project. No timestamps are stored:
re-running any stage on unchanged inputs leaves the directory byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import urllib.parse
from pathlib import Path

from filelock import FileLock

from .ingest import ValidationReport, parse_log
from .model import Behavior, OperationRef, Timeline
from .pipeline import segment_timeline
from .providers import ProviderConfig
from .segment import SegmentationResult
from .summarize import SummaryEngine, _atomic_write_bytes

PROJECT_FILE = "project.json"
LOG_FILE = "log.jsonl"
LOCK_FILE = ".lock"
PROJECT_VERSION = 1

_CACHE_SUBDIRS = ("summaries", "embeddings", "segmentations", "layouts")


class ProjectError(RuntimeError):
    """Missing or malformed project directory."""


class LogValidationError(ValueError):
    """Raised when an ingested log fails validation; carries the report."""

    def __init__(self, report: ValidationReport):
        super().__init__(f"log has {len(report.errors)} validation error(s)")
        self.report = report


def canonical_json(obj) -> str:
    """Deterministic JSON used for cache files and API bodies."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":"))


def _safe_name(part: str) -> str:
    return urllib.parse.quote(part, safe="")


def ingest_log(source: Path | str, root: Path | str) -> "Project":
    """Validate `source` and materialize a project directory at `root`.

    `source` may be a native JSONL file or a simulation snapshot directory
    (converted via the reverie adapter). Raises LogValidationError when the
    log does not parse cleanly.
    """
    source = Path(source)
    if source.is_dir():
        from .reverie import convert_reverie_dir

        text = convert_reverie_dir(source)
    else:
        text = source.read_text(encoding="utf-8")
    return ingest_text(text, root)


def ingest_text(text: str, root: Path | str) -> "Project":
    timeline, report = parse_log(text)
    if not report.ok:
        raise LogValidationError(report)
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    digest = hashlib.sha256(data).hexdigest()
    info = {"version": PROJECT_VERSION, "id": digest[:12], "source_digest": digest}
    _atomic_write_bytes(root / LOG_FILE, data)
    _atomic_write_bytes(root / PROJECT_FILE,
                        (canonical_json(info) + "\n").encode("utf-8"))
    for sub in _CACHE_SUBDIRS:
        (root / "cache" / sub).mkdir(parents=True, exist_ok=True)
    project = Project(root)
    project._timeline = timeline
    project._report = report
    return project


class Project:
    """Read access to one project directory plus its append-only caches."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        info_path = self.root / PROJECT_FILE
        if not info_path.is_file():
            raise ProjectError(f"{self.root} is not a project directory "
                               f"(missing {PROJECT_FILE})")
        try:
            info = json.loads(info_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ProjectError(f"unreadable {PROJECT_FILE}: {exc}") from exc
        if info.get("version") != PROJECT_VERSION:
            raise ProjectError(f"unsupported project version {info.get('version')!r}")
        self.project_id: str = info["id"]
        self.source_digest: str = info["source_digest"]
        self._timeline: Timeline | None = None
        self._report: ValidationReport | None = None

    @property
    def cache_dir(self) -> Path:
        return self.root / "cache"

    @property
    def log_path(self) -> Path:
        return self.root / LOG_FILE

    @property
    def timeline(self) -> Timeline:
        if self._timeline is None:
            timeline, report = parse_log(self.log_path.read_text(encoding="utf-8"))
            if timeline is None:
                raise ProjectError(f"stored log no longer parses: "
                                   f"{len(report.errors)} error(s)")
            self._report = report
            self._timeline = timeline
        return self._timeline

    def engine(self, config: ProviderConfig | None = None, **kwargs) -> SummaryEngine:
        if config is None:
            config = ProviderConfig.from_env()
        return SummaryEngine(self.cache_dir, config, **kwargs)

    def lock(self, timeout: float = 10.0) -> FileLock:
        return FileLock(str(self.root / LOCK_FILE), timeout=timeout)

    # -- persisted segmentations, keyed by (agent, range, n) ----------------

    def _segmentation_path(self, agent: str, range_: tuple[int, int], n: int) -> Path:
        a, b = range_
        name = f"{_safe_name(agent)}__{a}_{b}__n{n}.json"
        return self.cache_dir / "segmentations" / name

    def segmentation(self, engine: SummaryEngine, agent: str,
                     range_: tuple[int, int], n: int = 10,
                     window_width: int | None = None) -> SegmentationResult:
        """Load the cached segmentation for this key, computing it once."""
        path = self._segmentation_path(agent, range_, n)
        if path.is_file():
            return _segmentation_from_json(
                json.loads(path.read_text(encoding="utf-8")))
        result = segment_timeline(self.timeline, engine, agent, range_,
                                  n_segments=n, window_width=window_width)
        payload = _segmentation_to_json(result, range_, n)
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write_bytes(path, (canonical_json(payload) + "\n").encode("utf-8"))
        return result

    # -- persisted layouts, keyed by request parameters ---------------------

    def layout_path(self, key: str) -> Path:
        return self.cache_dir / "layouts" / f"{key}.json"

    def layout_key(self, range_: tuple[int, int], agents: tuple[str, ...],
                   n: int, query: str | None) -> str:
        raw = canonical_json({"range": list(range_), "agents": list(agents),
                              "n": n, "q": query})
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:16]


def _segmentation_to_json(result: SegmentationResult,
                          range_: tuple[int, int], n: int) -> dict:
    return {
        "agent": result.agent,
        "range": list(range_),
        "n": n,
        "change_indices": list(result.change_indices),
        "change_points": list(result.change_points),
        "curve_indices": list(result.curve_indices),
        "curve_scores": list(result.curve_scores),
        "segments": [
            {
                "start": seg.start,
                "end": seg.end,
                "description": seg.description,
                "emoji": seg.emoji,
                "operations": [[ref.time, ref.op_index] for ref in seg.operations],
            }
            for seg in result.segments
        ],
    }


def _segmentation_from_json(payload: dict) -> SegmentationResult:
    agent = payload["agent"]
    segments = tuple(
        Behavior(
            agent=agent,
            start=seg["start"],
            end=seg["end"],
            operations=tuple(OperationRef(t, agent, i)
                             for t, i in seg["operations"]),
            description=seg["description"],
            emoji=seg["emoji"],
        )
        for seg in payload["segments"]
    )
    return SegmentationResult(
        agent=agent,
        change_indices=tuple(payload["change_indices"]),
        change_points=tuple(payload["change_points"]),
        curve_indices=tuple(payload["curve_indices"]),
        curve_scores=tuple(payload["curve_scores"]),
        segments=segments,
    )
