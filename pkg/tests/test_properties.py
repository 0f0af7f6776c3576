"""Randomized properties of the scheduler, mutation operators and oracles."""

import math

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from mutsched.analysis import ALL_ORACLES, Oracle, compare
from mutsched.engine import simulate, simulate_zero_time
from mutsched.exceptions import MutationError
from mutsched.model import (
    Const,
    DataStoreSpec,
    Output,
    Read,
    Reg,
    RunnableSpec,
    TaskSpec,
    Write,
    make_model,
    parse_model,
    serialize_model,
)
from mutsched.mutation import (
    DeltaConfig,
    MutationDescriptor,
    MutationOperator as Op,
    MutationTarget,
    apply_mutant,
    enumerate_mutants,
)

from .conftest import CORPUS_NAMES, load_corpus
from .reference_scheduler import reference_schedule

pytestmark = pytest.mark.slow

# fresh_config is autouse and function-scoped; properties never touch the config
SUPPRESSED = [HealthCheck.too_slow, HealthCheck.filter_too_much, HealthCheck.function_scoped_fixture]
PROPERTY_SETTINGS = settings(max_examples=200, deadline=None, suppress_health_check=SUPPRESSED)


@st.composite
def task_sets(draw, max_tasks=3, max_period=12, timing=True):
    """Plain task tuples (name, period, wcet, offset, jitter, priority)."""
    count = draw(st.integers(1, max_tasks))
    tasks = []
    for i in range(count):
        period = draw(st.integers(1, max_period))
        wcet = draw(st.integers(1, max_period))
        offset = draw(st.integers(0, period - 1)) if timing else 0
        jitter = draw(st.integers(0, period - 1)) if timing else 0
        priority = draw(st.integers(1, 4))
        tasks.append((f'T{i + 1}', period, wcet, offset, jitter, priority))
    return tasks


def _build(tasks, split=(), precedence=None):
    """
    Model with one store written and read by every task.

    Tasks listed in `split` get their budget spread over two chained runnables;
    `precedence` maps a task name to the tasks it waits for.
    """
    precedence = precedence or {}
    specs, runnables = [], []
    for name, period, wcet, offset, jitter, priority in tasks:
        first = f'{name}_a'
        actions = (Read('S', 'x'), Write('S', Const(period)), Output(Reg('x')))
        if name in split and wcet > 1:
            second = f'{name}_b'
            runnables.append(RunnableSpec(first, wcet // 2, actions))
            runnables.append(RunnableSpec(second, wcet - wcet // 2, (), precedence=(first,)))
            ids = (first, second)
        else:
            runnables.append(RunnableSpec(first, wcet, actions))
            ids = (first,)
        specs.append(TaskSpec(name, period=period, runnables=ids, offset=offset,
                              jitter=jitter, priority=priority, precedence=precedence.get(name, ())))
    return make_model(specs, runnables, [DataStoreSpec('S', 0)])


def _occupancy(trace, horizon):
    cells = [None] * horizon
    for task, segments in trace.gantt.items():
        for seg in segments:
            for t in range(seg.start, seg.end):
                assert cells[t] is None
                cells[t] = task
    return cells


@PROPERTY_SETTINGS
@given(tasks=task_sets(), horizon=st.integers(1, 60), data=st.data())
def test_scheduler_matches_reference(tasks, horizon, data):
    split = data.draw(st.sets(st.sampled_from([t[0] for t in tasks])))
    trace = simulate(_build(tasks, split), horizon)
    occupancy, misses, completions = reference_schedule(tasks, horizon)

    assert _occupancy(trace, horizon) == occupancy
    assert {(e.time, e.task_id, e.instance) for e in trace.deadline_misses()} == misses
    assert {name: trace.completions(name) for name, *_ in tasks} == completions


@PROPERTY_SETTINGS
@given(tasks=task_sets(), horizon=st.integers(1, 60), data=st.data())
def test_scheduler_matches_reference_with_task_precedence(tasks, horizon, data):
    names = [t[0] for t in tasks]
    # predecessors come from earlier tasks only, which keeps the graph acyclic
    precedence = {
        name: tuple(sorted(data.draw(st.sets(st.sampled_from(names[:i]))))) if i else ()
        for i, name in enumerate(names)
    }
    split = data.draw(st.sets(st.sampled_from(names)))
    trace = simulate(_build(tasks, split, precedence), horizon)
    occupancy, misses, completions = reference_schedule(tasks, horizon, precedence)

    assert _occupancy(trace, horizon) == occupancy
    assert {(e.time, e.task_id, e.instance) for e in trace.deadline_misses()} == misses
    assert {name: trace.completions(name) for name, *_ in tasks} == completions


@settings(max_examples=100, deadline=None, suppress_health_check=SUPPRESSED)
@given(tasks=task_sets(timing=False))
def test_overload_always_misses(tasks):
    assume(sum(wcet / period for _, period, wcet, *_ in tasks) > 1)
    hyper = math.lcm(*(t[1] for t in tasks))
    trace = simulate(_build(tasks), 3 * hyper)
    assert trace.deadline_misses()


@pytest.mark.parametrize('name', CORPUS_NAMES)
def test_zero_time_ignores_execution_time_mutants(name):
    model = load_corpus(name)
    base = simulate_zero_time(model)
    for d in enumerate_mutants(model, DeltaConfig(), [Op.ITET, Op.DTET]):
        mutant = simulate_zero_time(apply_mutant(model, d), base.horizon)
        assert mutant.events == base.events, d.mutant_id
        assert mutant.accesses == base.accesses, d.mutant_id
        assert mutant.outputs == base.outputs, d.mutant_id


@PROPERTY_SETTINGS
@given(tasks=task_sets(), horizon=st.integers(1, 60))
def test_compare_is_reflexive(tasks, horizon):
    model = _build(tasks)
    for run in (simulate, simulate_zero_time):
        trace = run(model, horizon)
        assert not compare(trace, trace).killed
        assert not compare(trace, run(model, horizon)).killed


@PROPERTY_SETTINGS
@given(tasks=task_sets(), data=st.data())
def test_serialize_round_trip(tasks, data):
    split = data.draw(st.sets(st.sampled_from([t[0] for t in tasks])))
    model = _build(tasks, split)
    assert parse_model(serialize_model(model)) == model


_INVERSE = [(Op.ITO, Op.DTO), (Op.ITPER, Op.DTPER), (Op.ITET, Op.DTET),
            (Op.ITPRI, Op.DTPRI), (Op.ITJ, Op.DTJ)]


@PROPERTY_SETTINGS
@given(tasks=task_sets(), pair=st.sampled_from(_INVERSE), delta=st.integers(1, 5), data=st.data())
def test_inverse_operators_restore_model(tasks, pair, delta, data):
    model = _build(tasks)
    task = data.draw(st.sampled_from([t[0] for t in tasks]))
    up, down = (MutationDescriptor(op, MutationTarget(task=task), delta=delta) for op in pair)
    try:
        mutant = apply_mutant(model, up)
    except MutationError:
        assume(False)
    assert mutant != model
    assert apply_mutant(mutant, down) == model


@PROPERTY_SETTINGS
@given(tasks=task_sets(), op=st.sampled_from([Op.ITO, Op.DTPER, Op.ITET, Op.DTPRI, Op.ITJ]),
       delta=st.integers(1, 3), horizon=st.integers(1, 60), data=st.data())
def test_wider_oracle_policy_kills_more(tasks, op, delta, horizon, data):
    model = _build(tasks)
    task = data.draw(st.sampled_from([t[0] for t in tasks]))
    try:
        mutant = apply_mutant(model, MutationDescriptor(op, MutationTarget(task=task), delta=delta))
    except MutationError:
        assume(False)
    base, mut = simulate(model, horizon), simulate(mutant, horizon)
    narrow = compare(base, mut, {Oracle.DEADLINE})
    middle = compare(base, mut, {Oracle.DEADLINE, Oracle.ACCESS})
    wide = compare(base, mut, ALL_ORACLES)
    assert narrow.reasons <= middle.reasons <= wide.reasons
