"""Core domain model: the four-layer structure of a multi-agent run.

A loaded project is an immutable :class:`Timeline` indexed three ways:
environment state per tick, agent state per (tick, agent), and ordered
operation lists per (tick, agent).  A :class:`Behavior` is the slice of one
agent's operations over a half-open tick interval; every downstream stage
(summaries, segmentation, cause mining, layout) consumes these two shapes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping

__all__ = [
    "TaskKind",
    "OperationKind",
    "OperationRef",
    "Operation",
    "AgentCharacteristic",
    "LocationInfo",
    "ProjectMeta",
    "EnvironmentState",
    "AgentState",
    "Timeline",
    "Behavior",
    "TimeInterval",
    "UnknownAgentError",
    "InvalidIntervalError",
    "behavior_of",
]


class TaskKind(str, Enum):
    PERCEIVE = "perceive"
    THINK = "think"
    ACT = "act"


class OperationKind(str, Enum):
    ENVIRONMENT = "environment"
    MEMORY = "memory"
    DECISION = "decision"


class UnknownAgentError(KeyError):
    """Raised when an agent id does not resolve against the project meta."""


class InvalidIntervalError(ValueError):
    """Raised for empty or inverted tick intervals."""


@dataclass(frozen=True, order=True)
class OperationRef:
    """Canonical identity of one operation: (time, agent, op_index)."""

    time: int
    agent: str
    op_index: int

    def strictly_precedes(self, other: "OperationRef") -> bool:
        """Temporal precedence: lexicographic within an agent, strictly
        earlier tick across agents (same-tick cross-agent order is undefined)."""
        if self.agent == other.agent:
            return (self.time, self.op_index) < (other.time, other.op_index)
        return self.time < other.time


@dataclass(frozen=True)
class Operation:
    time: int
    agent: str
    task_id: str
    task_kind: TaskKind
    op_index: int
    kind: OperationKind
    text: str
    prompt: str | None = None
    response: str | None = None
    explicit_causes: tuple[OperationRef, ...] = ()
    extra: Mapping[str, object] = field(default_factory=dict)

    @property
    def ref(self) -> OperationRef:
        return OperationRef(self.time, self.agent, self.op_index)


@dataclass(frozen=True)
class AgentCharacteristic:
    agent: str
    name: str
    description: str


@dataclass(frozen=True)
class LocationInfo:
    location: str
    name: str
    bounds: tuple[float, float, float, float]  # x0, y0, x1, y1

    def contains(self, position: tuple[float, float]) -> bool:
        x0, y0, x1, y1 = self.bounds
        x, y = position
        return x0 <= x <= x1 and y0 <= y <= y1


@dataclass(frozen=True)
class ProjectMeta:
    version: int
    agents: tuple[AgentCharacteristic, ...]
    locations: tuple[LocationInfo, ...]
    time_unit: str | None = None
    extra: Mapping[str, object] = field(default_factory=dict)

    def agent_ids(self) -> tuple[str, ...]:
        return tuple(a.agent for a in self.agents)

    def location_ids(self) -> tuple[str, ...]:
        return tuple(l.location for l in self.locations)

    def characteristic(self, agent: str) -> AgentCharacteristic:
        for a in self.agents:
            if a.agent == agent:
                return a
        raise UnknownAgentError(agent)

    def location_info(self, location: str) -> LocationInfo:
        for l in self.locations:
            if l.location == location:
                return l
        raise KeyError(location)


@dataclass(frozen=True)
class EnvironmentState:
    time: int
    attrs: Mapping[str, str] = field(default_factory=dict)
    extra: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class AgentState:
    time: int
    agent: str
    location: str
    position: tuple[float, float] | None = None
    attrs: Mapping[str, str] = field(default_factory=dict)
    extra: Mapping[str, object] = field(default_factory=dict)


TimeInterval = tuple[int, int]
"""Half-open tick interval [t0, t1)."""


def _check_interval(range_: TimeInterval) -> tuple[int, int]:
    t0, t1 = range_
    if t0 >= t1:
        raise InvalidIntervalError(f"empty or inverted interval [{t0}, {t1})")
    return t0, t1


class Timeline:
    """Immutable index over one ingested run.

    Construction happens once (in the ingest stage); afterwards the structure
    is read-only and safe for unrestricted concurrent reads.  Lookups are
    dict-backed and total on ingested keys.
    """

    def __init__(
        self,
        meta: ProjectMeta,
        env_states: Mapping[int, EnvironmentState],
        agent_states: Mapping[tuple[int, str], AgentState],
        operations: Mapping[tuple[int, str], tuple[Operation, ...]],
    ) -> None:
        self._meta = meta
        self._env = dict(env_states)
        self._agent_states = dict(agent_states)
        self._ops = {k: tuple(v) for k, v in operations.items()}
        self._by_ref: dict[OperationRef, Operation] = {}
        for ops in self._ops.values():
            for op in ops:
                self._by_ref[op.ref] = op
        times = [0]
        times += [t for t in self._env]
        times += [t for t, _ in self._agent_states]
        times += [t for t, _ in self._ops]
        self._t_min = min(times)
        self._t_max = max(times)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Timeline):
            return NotImplemented
        return (
            self._meta == other._meta
            and self._env == other._env
            and self._agent_states == other._agent_states
            and self._ops == other._ops
        )

    __hash__ = None  # type: ignore[assignment]  # mutable-dict backed

    @property
    def meta(self) -> ProjectMeta:
        return self._meta

    @property
    def time_bounds(self) -> tuple[int, int]:
        """Inclusive (t_min, t_max) over every ingested record."""
        return self._t_min, self._t_max

    def env_state(self, time: int) -> EnvironmentState | None:
        """State at exactly `time`; tick 0 doubles as the pre-run environment."""
        return self._env.get(time)

    def agent_state(self, time: int, agent: str) -> AgentState | None:
        return self._agent_states.get((time, agent))

    def last_agent_state(self, time: int, agent: str) -> AgentState | None:
        """Carry-forward lookup: the most recent state at or before `time`."""
        for t in range(time, self._t_min - 1, -1):
            st = self._agent_states.get((t, agent))
            if st is not None:
                return st
        return None

    def operations_at(self, time: int, agent: str) -> tuple[Operation, ...]:
        return self._ops.get((time, agent), ())

    def operation(self, ref: OperationRef) -> Operation:
        return self._by_ref[ref]

    def has_operation(self, ref: OperationRef) -> bool:
        return ref in self._by_ref

    def iter_operations(self, agent: str | None = None) -> Iterator[Operation]:
        """All operations in (time, agent, op_index) order."""
        for key in sorted(self._ops):
            t, a = key
            if agent is not None and a != agent:
                continue
            yield from self._ops[key]

    def iter_agent_states(self, agent: str | None = None) -> Iterator[AgentState]:
        for key in sorted(self._agent_states):
            _, a = key
            if agent is not None and a != agent:
                continue
            yield self._agent_states[key]

    def iter_env_states(self) -> Iterator[EnvironmentState]:
        for t in sorted(self._env):
            yield self._env[t]

    def op_times(self, agent: str) -> list[int]:
        """Sorted ticks at which `agent` has at least one operation."""
        return sorted(t for (t, a) in self._ops if a == agent)

    def count_operations(self) -> int:
        return len(self._by_ref)


@dataclass(frozen=True)
class Behavior:
    """One agent's operations over a half-open interval [start, end).

    Summary fields stay unset until the summarize stage fills them in.
    """

    agent: str
    start: int
    end: int
    operations: tuple[OperationRef, ...]
    description: str | None = None
    emoji: str | None = None
    embedding: object | None = None

    @property
    def range(self) -> TimeInterval:
        return (self.start, self.end)


def behavior_of(timeline: Timeline, agent: str, range_: TimeInterval) -> Behavior:
    """Collect exactly the agent's operations with start <= time < end.

    Raises UnknownAgentError for undeclared agents and InvalidIntervalError
    for empty or inverted ranges.  The result carries no summary fields.
    """
    t0, t1 = _check_interval(range_)
    if agent not in timeline.meta.agent_ids():
        raise UnknownAgentError(agent)
    refs: list[OperationRef] = []
    for t in range(t0, t1):
        for op in timeline.operations_at(t, agent):
            refs.append(op.ref)
    return Behavior(agent=agent, start=t0, end=t1, operations=tuple(refs))
