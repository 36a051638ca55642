import pytest

from agentlens.model import (
    AgentCharacteristic,
    AgentState,
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


def make_meta(agents=("a", "b")):
    return ProjectMeta(
        version=1,
        agents=tuple(AgentCharacteristic(agent=x, name=x.title(), description="") for x in agents),
        locations=(LocationInfo(location="room", name="Room", bounds=(0.0, 0.0, 10.0, 10.0)),),
    )


def op(t, agent, i, text="x", kind=OperationKind.ENVIRONMENT, task_kind=TaskKind.ACT, **kw):
    return Operation(
        time=t, agent=agent, task_id=f"task-{t}", task_kind=task_kind,
        op_index=i, kind=kind, text=text, **kw,
    )


def make_timeline(ops_list):
    cells = {}
    for o in ops_list:
        cells.setdefault((o.time, o.agent), []).append(o)
    cells = {k: tuple(sorted(v, key=lambda o: o.op_index)) for k, v in cells.items()}
    return Timeline(
        meta=make_meta(),
        env_states={0: EnvironmentState(time=0)},
        agent_states={(0, "a"): AgentState(time=0, agent="a", location="room"),
                      (0, "b"): AgentState(time=0, agent="b", location="room")},
        operations=cells,
    )


class TestOperationRef:
    def test_same_agent_lexicographic(self):
        a = OperationRef(3, "a", 1)
        assert OperationRef(3, "a", 0).strictly_precedes(a)
        assert OperationRef(2, "a", 9).strictly_precedes(a)
        assert not a.strictly_precedes(a)
        assert not OperationRef(3, "a", 2).strictly_precedes(a)

    def test_cross_agent_needs_strictly_earlier_time(self):
        dst = OperationRef(5, "b", 0)
        assert OperationRef(4, "a", 7).strictly_precedes(dst)
        assert not OperationRef(5, "a", 0).strictly_precedes(dst)
        assert not OperationRef(6, "a", 0).strictly_precedes(dst)

    def test_ordering_is_tuple_order(self):
        refs = [OperationRef(2, "b", 0), OperationRef(1, "z", 5), OperationRef(2, "a", 1)]
        assert sorted(refs) == [OperationRef(1, "z", 5), OperationRef(2, "a", 1), OperationRef(2, "b", 0)]


class TestTimelineLookups:
    def test_lookup_by_ref_is_total_on_ingested_refs(self):
        ops = [op(1, "a", 0), op(1, "a", 1), op(4, "b", 0)]
        tl = make_timeline(ops)
        for o in ops:
            assert tl.operation(o.ref) is o
        assert tl.count_operations() == 3

    def test_cell_order_is_op_index(self):
        tl = make_timeline([op(2, "a", 1, "second"), op(2, "a", 0, "first")])
        texts = [o.text for o in tl.operations_at(2, "a")]
        assert texts == ["first", "second"]

    def test_missing_cell_is_empty(self):
        tl = make_timeline([op(1, "a", 0)])
        assert tl.operations_at(9, "a") == ()

    def test_last_agent_state_carries_forward(self):
        tl = Timeline(
            meta=make_meta(),
            env_states={0: EnvironmentState(time=0)},
            agent_states={
                (0, "a"): AgentState(time=0, agent="a", location="room"),
                (5, "a"): AgentState(time=5, agent="a", location="room", position=(1.0, 2.0)),
            },
            operations={},
        )
        assert tl.last_agent_state(4, "a").time == 0
        assert tl.last_agent_state(5, "a").time == 5
        assert tl.last_agent_state(99, "a").time == 5
        assert tl.last_agent_state(0, "b") is None or tl.last_agent_state(0, "b").agent == "b"

    def test_time_bounds_cover_all_records(self):
        tl = make_timeline([op(7, "a", 0)])
        assert tl.time_bounds == (0, 7)


class TestBehaviorOf:
    def test_agent_with_no_ops_in_range_gives_empty_list(self):
        tl = make_timeline([op(1, "a", 0)])
        b = behavior_of(tl, "a", (5, 9))
        assert b.operations == ()
        assert b.range == (5, 9)
        assert b.description is None and b.emoji is None and b.embedding is None

    def test_full_range_collects_every_operation_of_that_agent(self):
        ops = [op(1, "a", 0), op(1, "a", 1), op(3, "a", 0), op(2, "b", 0)]
        tl = make_timeline(ops)
        b = behavior_of(tl, "a", (0, 8))
        assert b.operations == (OperationRef(1, "a", 0), OperationRef(1, "a", 1), OperationRef(3, "a", 0))

    def test_range_is_half_open(self):
        tl = make_timeline([op(4, "a", 0), op(5, "a", 0)])
        b = behavior_of(tl, "a", (4, 5))
        assert b.operations == (OperationRef(4, "a", 0),)

    def test_unknown_agent_raises(self):
        tl = make_timeline([op(1, "a", 0)])
        with pytest.raises(UnknownAgentError):
            behavior_of(tl, "nobody", (0, 5))

    @pytest.mark.parametrize("rng", [(5, 5), (6, 2)])
    def test_empty_or_inverted_range_raises(self, rng):
        tl = make_timeline([op(1, "a", 0)])
        with pytest.raises(InvalidIntervalError):
            behavior_of(tl, "a", rng)

    def test_adjacent_ranges_concatenate(self):
        ops = [op(t, "a", 0) for t in range(0, 12)]
        tl = make_timeline(ops)
        whole = behavior_of(tl, "a", (0, 12)).operations
        for mid in range(1, 12):
            left = behavior_of(tl, "a", (0, mid)).operations
            right = behavior_of(tl, "a", (mid, 12)).operations
            assert left + right == whole
