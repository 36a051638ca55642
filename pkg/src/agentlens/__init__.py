"""agentlens: a workbench for multi-agent simulation logs.

Ingest JSONL execution logs, index them into a queryable timeline, summarize
behaviors, segment each agent's run into coherent phases, trace causes between
operations, and serve the result over HTTP for interactive frontends.
"""

from .model import (
    AgentCharacteristic,
    AgentState,
    Behavior,
    EnvironmentState,
    InvalidIntervalError,
    LocationInfo,
    Operation,
    OperationKind,
    OperationRef,
    ProjectMeta,
    TaskKind,
    Timeline,
    UnknownAgentError,
    behavior_of,
)

__version__ = "0.1.0"

__all__ = [
    "AgentCharacteristic",
    "AgentState",
    "Behavior",
    "EnvironmentState",
    "InvalidIntervalError",
    "LocationInfo",
    "Operation",
    "OperationKind",
    "OperationRef",
    "ProjectMeta",
    "TaskKind",
    "Timeline",
    "UnknownAgentError",
    "behavior_of",
    "__version__",
]
