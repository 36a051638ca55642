"""Command-line pipeline driver.

Every command takes --project pointing at a project directory, holds that
directory's lock for its duration, and finishes by printing one JSON object
line to stdout describing what happened. Exit codes: 0 success, 2 for
validation problems (bad arguments, malformed logs, unknown ids, lock
contention), 3 for provider failures.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import sys
from pathlib import Path

from filelock import FileLock, Timeout

from .causes import DEFAULT_DELTA, edge_payload, explicit_causes, implicit_causes
from .export import write_export
from .model import OperationRef
from .pipeline import build_embedding_sequence
from .project import (
    LOCK_FILE,
    LogValidationError,
    Project,
    ProjectError,
    canonical_json,
    ingest_log,
)
from .providers import ProviderConfig, ProviderError
from .search import DEFAULT_THRESHOLD, EmbeddingsNotBuiltError, memory_search
from .server import DEFAULT_PORT

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PROVIDER = 3


def _emit(payload: dict) -> None:
    sys.stdout.write(canonical_json(payload) + "\n")


def _config(offline: bool) -> ProviderConfig:
    if offline:
        return ProviderConfig(offline=True)
    return ProviderConfig.from_env()


def _print_issues(report, stream=None) -> None:
    stream = stream if stream is not None else sys.stderr
    for issue in report.errors + report.warnings:
        stream.write(f"line {issue.line}: {issue.code} {issue.message}\n")


def cmd_ingest(args) -> int:
    project_dir = Path(args.project)
    project_dir.mkdir(parents=True, exist_ok=True)
    with FileLock(str(project_dir / LOCK_FILE), timeout=args.lock_timeout):
        project = ingest_log(Path(args.log), project_dir)
    report = project._report
    _print_issues(report)
    _emit({
        "command": "ingest",
        "project": project.project_id,
        "path": str(project_dir),
        "records": report.records,
        "ops": sum(report.ops_per_agent.values()),
        "warnings": len(report.warnings),
    })
    return EXIT_OK


def cmd_summarize(args) -> int:
    project = Project(args.project)
    timeline = project.timeline
    t0, t1 = timeline.time_bounds
    range_ = (t0, t1 + 1)
    descriptions = 0
    with project.lock(args.lock_timeout):
        with contextlib.closing(project.engine(_config(args.offline))) as engine:
            for agent in timeline.meta.agent_ids():
                try:
                    seq, _ = build_embedding_sequence(
                        timeline, engine, agent, range_)
                except ValueError:
                    continue
                descriptions += len(seq)
            stats = engine.stats.as_dict()
    _emit({
        "command": "summarize",
        "project": project.project_id,
        "offline": bool(args.offline),
        "descriptions": descriptions,
        "stats": stats,
    })
    return EXIT_OK


def cmd_segment(args) -> int:
    project = Project(args.project)
    with project.lock(args.lock_timeout):
        with contextlib.closing(project.engine(_config(args.offline))) as engine:
            result = project.segmentation(
                engine, args.agent, (args.from_, args.to), args.n)
    _emit({
        "command": "segment",
        "project": project.project_id,
        "agent": args.agent,
        "range": [args.from_, args.to],
        "n": args.n,
        "changePoints": list(result.change_points),
        "segments": len(result.segments),
    })
    return EXIT_OK


def _parse_op(spec: str) -> OperationRef:
    parts = spec.split(",")
    if len(parts) != 3:
        raise ValueError(f"--op expects t,agent,idx; got {spec!r}")
    return OperationRef(int(parts[0]), parts[1].strip(), int(parts[2]))


def cmd_trace(args) -> int:
    project = Project(args.project)
    ref = _parse_op(args.op)
    timeline = project.timeline
    with project.lock(args.lock_timeout):
        with contextlib.closing(project.engine(_config(args.offline))) as engine:
            explicit = explicit_causes(timeline, ref)
            implicit = implicit_causes(timeline, engine, ref,
                                       delta=args.delta, scope=args.scope)
    _emit({
        "command": "trace",
        "project": project.project_id,
        "op": {"t": ref.time, "agent": ref.agent, "opIndex": ref.op_index},
        "delta": args.delta,
        "explicit": [edge_payload(e) for e in explicit],
        "implicit": [edge_payload(e) for e in implicit],
    })
    return EXIT_OK


def cmd_search(args) -> int:
    project = Project(args.project)
    with project.lock(args.lock_timeout):
        with contextlib.closing(project.engine(_config(args.offline))) as engine:
            hits = memory_search(project.timeline, args.q, mode=args.mode,
                                 threshold=args.threshold, engine=engine)
    _emit({
        "command": "search",
        "project": project.project_id,
        "q": args.q,
        "mode": args.mode,
        "hits": [
            {"agent": h.agent, "t": h.time, "opIndex": h.op_index,
             "score": round(h.score, 9), "mode": h.mode}
            for h in hits
        ],
    })
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import serve

    project_dir = Path(args.project)
    if (project_dir / "project.json").is_file():
        initial = Project(project_dir)
        root = project_dir.parent
    else:
        initial = None
        root = project_dir
    _emit({"command": "serve", "port": args.port, "root": str(root)})
    sys.stdout.flush()
    serve(root, port=args.port, host=args.host, initial=initial)
    return EXIT_OK


def cmd_export(args) -> int:
    project = Project(args.project)
    with project.lock(args.lock_timeout):
        with contextlib.closing(
                project.engine(ProviderConfig(offline=True))) as engine:
            data = write_export(project, engine, args.out,
                                n_segments=args.n, delta=args.delta)
    _emit({
        "command": "export",
        "project": project.project_id,
        "path": str(args.out),
        "bytes": len(data),
        "sha256": hashlib.sha256(data).hexdigest(),
    })
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, offline: bool = True) -> None:
    parser.add_argument("--project", "--project-dir", dest="project",
                        required=True, help="project directory")
    parser.add_argument("--lock-timeout", type=float, default=10.0,
                        help="seconds to wait for the project lock")
    if offline:
        parser.add_argument("--offline", action="store_true",
                            help="never call providers; use deterministic fallbacks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentlens",
        description="Ingest, summarize, segment, trace, and serve agent "
                    "execution logs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a log and create a project")
    p.add_argument("log", help="JSONL log file or simulation snapshot directory")
    _add_common(p, offline=False)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("summarize",
                       help="describe and embed every operation-bearing tick")
    _add_common(p)
    p.set_defaults(handler=cmd_summarize)

    p = sub.add_parser("segment", help="segment one agent over a range")
    _add_common(p)
    p.add_argument("--agent", required=True)
    p.add_argument("--from", dest="from_", type=int, required=True)
    p.add_argument("--to", dest="to", type=int, required=True)
    p.add_argument("--n", type=int, default=10)
    p.set_defaults(handler=cmd_segment)

    p = sub.add_parser("trace", help="explicit and implicit causes of one operation")
    _add_common(p)
    p.add_argument("--op", required=True, metavar="T,AGENT,IDX")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--scope", choices=("sameAgent", "allAgents"),
                   default="sameAgent")
    p.set_defaults(handler=cmd_trace)

    p = sub.add_parser("search", help="search memory operation texts")
    _add_common(p)
    p.add_argument("--q", required=True)
    p.add_argument("--mode", choices=("lexical", "semantic"), default="lexical")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--project", "--project-dir", dest="project", required=True)
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(handler=cmd_serve)

    p = sub.add_parser("export", help="write the full analysis as one JSON file")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.set_defaults(handler=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except LogValidationError as exc:
        _print_issues(exc.report)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except ProviderError as exc:
        sys.stderr.write(f"provider error: {exc}\n")
        return EXIT_PROVIDER
    except Timeout:
        sys.stderr.write("error: project directory is locked by another command\n")
        return EXIT_VALIDATION
    except EmbeddingsNotBuiltError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except (ProjectError, ValueError, KeyError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
