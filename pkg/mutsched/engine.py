"""Discrete-time scheduler for task models.

Two semantics are provided:

* time-aware: preemptive fixed-priority scheduling on one processor where
  every runnable consumes its wcet, one tick at a time;
* zero-time: every released instance completes instantly at its release
  tick, in priority order.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Dict, Iterable, List, Optional, Set, Tuple

from .behavior import AccessEvent, OutputEvent, RegisterFile, StoreState, run_actions
from .exceptions import SimulationError, TraceError
from .model import (
    Semantics,
    SystemModel,
    TaskSpec,
    Tick,
    TraceDetail,
    assign_rm_priorities,
    default_horizon,
    validate,
)

logger = logging.getLogger(__name__)


class TaskState(Enum):
    SUSPENDED = "suspended"
    READY = "ready"
    RUNNING = "running"


class EventKind(Enum):
    ACTIVATE = "Activate"
    START = "Start"
    PREEMPT = "Preempt"
    RESUME = "Resume"
    TERMINATE = "Terminate"
    DEADLINE_MISS = "DeadlineMiss"
    RUNNABLE_START = "RunnableStart"
    RUNNABLE_END = "RunnableEnd"

    @property
    def rank(self) -> int:
        """Order of events sharing a tick in time-aware traces."""
        return _RANK[self]


_RANK = {
    EventKind.RUNNABLE_END: 0,
    EventKind.TERMINATE: 1,
    EventKind.DEADLINE_MISS: 2,
    EventKind.ACTIVATE: 3,
    EventKind.PREEMPT: 4,
    EventKind.START: 5,
    EventKind.RESUME: 5,
    EventKind.RUNNABLE_START: 6,
}

# lifecycle events: state an instance must be in -> state it moves to
TASK_TRANSITIONS = {
    EventKind.ACTIVATE: (TaskState.SUSPENDED, TaskState.READY),
    EventKind.START: (TaskState.READY, TaskState.RUNNING),
    EventKind.RESUME: (TaskState.READY, TaskState.RUNNING),
    EventKind.PREEMPT: (TaskState.RUNNING, TaskState.READY),
    EventKind.TERMINATE: (TaskState.RUNNING, TaskState.SUSPENDED),
}


@dataclass(frozen=True)
class TraceEvent:
    time: Tick
    kind: EventKind
    task_id: str
    instance: int
    runnable_id: Optional[str] = None


@dataclass(frozen=True)
class Segment:
    """Half-open execution interval [start, end) of one runnable."""

    start: Tick
    end: Tick
    runnable_id: str


@dataclass
class Trace:
    events: List[TraceEvent] = field(default_factory=list)
    accesses: List[AccessEvent] = field(default_factory=list)
    outputs: List[OutputEvent] = field(default_factory=list)
    gantt: Dict[str, List[Segment]] = field(default_factory=dict)
    horizon: Optional[Tick] = None
    semantics: Semantics = Semantics.TIME_AWARE
    tasks: Tuple[str, ...] = ()
    runnables: Tuple[str, ...] = ()
    stores: Tuple[str, ...] = ()

    def of_kind(self, kind: EventKind) -> List[TraceEvent]:
        return [e for e in self.events if e.kind is kind]

    def deadline_misses(self) -> List[TraceEvent]:
        return self.of_kind(EventKind.DEADLINE_MISS)

    def completions(self, task_id: str) -> int:
        return sum(1 for e in self.events if e.kind is EventKind.TERMINATE and e.task_id == task_id)


class _Instance:
    """Run-time state of one released task instance."""

    def __init__(self, task: TaskSpec, index: int):
        self.task = task
        self.index = index
        self.release = index * task.period + task.offset + task.jitter
        self.deadline = (index + 1) * task.period + task.offset
        self.remaining: Dict[str, int] = {}
        self.done: Set[str] = set()
        self.current: Optional[str] = None
        self.started = False
        self.state = TaskState.SUSPENDED

    @property
    def finished(self) -> bool:
        return len(self.done) == len(self.task.runnables)


def _release_time(task: TaskSpec, index: int) -> Tick:
    return index * task.period + task.offset + task.jitter


class _Run:
    """Shared bookkeeping for one simulation run."""

    def __init__(self, model: SystemModel, horizon: Tick, detail: TraceDetail, semantics: Semantics):
        self.model = model
        self.horizon = horizon
        self.detail = detail
        self.tasks = sorted(model.tasks, key=lambda t: t.spawn_index)
        self.next_index: Dict[str, int] = {t.id: 0 for t in self.tasks}
        self.store = StoreState.for_model(model)
        self.regs = RegisterFile()
        self.trace = Trace(
            horizon=horizon,
            semantics=semantics,
            tasks=tuple(t.id for t in self.tasks),
            runnables=tuple(model.runnables),
            stores=model.store_ids(),
        )

    def emit(self, t: Tick, kind: EventKind, inst: _Instance, runnable: Optional[str] = None) -> None:
        self.trace.events.append(TraceEvent(t, kind, inst.task.id, inst.index, runnable))

    def transition(self, t: Tick, kind: EventKind, inst: _Instance, runnable: Optional[str] = None) -> None:
        """Move an instance along its lifecycle and record the event."""
        source, target = TASK_TRANSITIONS[kind]
        if inst.state is not source:
            raise SimulationError(
                f"task {inst.task.id} instance {inst.index}: {kind.value} while {inst.state.value}"
            )
        inst.state = target
        self.emit(t, kind, inst, runnable)

    def release(self, t: Tick) -> List[_Instance]:
        released = []
        for task in self.tasks:
            k = self.next_index[task.id]
            if _release_time(task, k) == t:
                inst = _Instance(task, k)
                inst.remaining = {r: self.model.runnables[r].wcet for r in task.runnables}
                self.next_index[task.id] = k + 1
                self.transition(t, EventKind.ACTIVATE, inst)
                released.append(inst)
        return released

    def next_runnable(self, inst: _Instance) -> str:
        for rid in inst.task.runnables:
            if rid in inst.done:
                continue
            if all(p in inst.done for p in self.model.runnables[rid].precedence):
                return rid
        raise SimulationError(f"task {inst.task.id}: no runnable can start")

    def complete_runnable(self, t: Tick, inst: _Instance, rid: str) -> None:
        inst.done.add(rid)
        inst.current = None
        self.emit(t, EventKind.RUNNABLE_END, inst, rid)
        accesses, outputs = run_actions(self.model.runnables[rid], self.store, self.regs, t, inst.task.id)
        if self.detail & TraceDetail.ACCESSES:
            self.trace.accesses.extend(accesses)
        if self.detail & TraceDetail.OUTPUTS:
            self.trace.outputs.extend(outputs)

    def finish(self) -> Trace:
        if self.detail & TraceDetail.GANTT:
            self.trace.gantt = derive_gantt(self.trace)
        else:
            self.trace.gantt = {}
        return self.trace


def _prepare(model: SystemModel, horizon: Optional[Tick]) -> Tuple[SystemModel, Tick]:
    report = validate(model)
    if not report.ok:
        raise SimulationError("invalid model: " + "; ".join(v.message for v in report))
    if horizon is None:
        horizon = model.config.horizon if model.config.horizon is not None else default_horizon(model)
    if horizon <= 0:
        raise SimulationError("horizon must be positive")
    return assign_rm_priorities(model), horizon


def _dispatch_key(task: TaskSpec) -> Tuple[int, int]:
    return (task.priority or 0, -task.spawn_index)


def simulate(
    model: SystemModel,
    horizon: Optional[Tick] = None,
    detail: Optional[TraceDetail] = None,
) -> Trace:
    """
    Simulate a model with execution-time-aware preemptive fixed priorities.

    At every tick the highest-priority eligible instance runs (spawn order
    breaks ties). Actions fire when a runnable completes, late instances
    keep running and later instances of the same task queue behind them.

    Args:
        model: A valid model
        horizon: Ticks to simulate (defaults to the model's setting, then
            to two hyperperiods past the latest first release)
        detail: Trace parts to record (defaults to the model's setting)

    Returns:
        The complete Trace
    """
    model, horizon = _prepare(model, horizon)
    run = _Run(model, horizon, detail if detail is not None else model.config.trace_detail,
               Semantics.TIME_AWARE)
    queues: Dict[str, Deque[_Instance]] = {t.id: deque() for t in run.tasks}
    running: Optional[_Instance] = None

    def eligible(inst: _Instance) -> bool:
        return inst.started or not any(queues[p] for p in inst.task.precedence)

    for t in range(horizon + 1):
        for task in run.tasks:
            for inst in queues[task.id]:
                if inst.deadline == t:
                    run.emit(t, EventKind.DEADLINE_MISS, inst)
        if t == horizon:
            break

        for inst in run.release(t):
            queues[inst.task.id].append(inst)

        heads = [q[0] for q in queues.values() if q and eligible(q[0])]
        chosen = max(heads, key=lambda i: _dispatch_key(i.task), default=None)

        if chosen is not running:
            if running is not None:
                run.transition(t, EventKind.PREEMPT, running, running.current)
            if chosen is not None:
                if chosen.started:
                    run.transition(t, EventKind.RESUME, chosen, chosen.current)
                else:
                    chosen.started = True
                    run.transition(t, EventKind.START, chosen)
            running = chosen
        if running is None:
            continue

        if running.current is None:
            running.current = run.next_runnable(running)
            run.emit(t, EventKind.RUNNABLE_START, running, running.current)

        rid = running.current
        running.remaining[rid] -= 1
        if running.remaining[rid] == 0:
            run.complete_runnable(t + 1, running, rid)
            if running.finished:
                run.transition(t + 1, EventKind.TERMINATE, running)
                queues[running.task.id].popleft()
                running = None

    trace = run.finish()
    logger.info("time-aware simulation: %d events, %d deadline misses over %d ticks",
                len(trace.events), len(trace.deadline_misses()), horizon)
    return trace


def simulate_zero_time(
    model: SystemModel,
    horizon: Optional[Tick] = None,
    detail: Optional[TraceDetail] = None,
) -> Trace:
    """
    Simulate a model with zero-execution-time semantics.

    Every instance released at a tick runs to completion at that same tick,
    in priority order (spawn order on ties) subject to precedence. Execution
    times are ignored, nothing is preempted and no deadline is missed.
    """
    model, horizon = _prepare(model, horizon)
    run = _Run(model, horizon, detail if detail is not None else model.config.trace_detail,
               Semantics.ZERO_TIME)

    for t in range(horizon):
        pending = run.release(t)
        while pending:
            pending_tasks = {i.task.id for i in pending}
            ready = [i for i in pending if not any(p in pending_tasks for p in i.task.precedence)]
            inst = max(ready, key=lambda i: _dispatch_key(i.task))
            pending.remove(inst)
            run.transition(t, EventKind.START, inst)
            while not inst.finished:
                rid = run.next_runnable(inst)
                run.emit(t, EventKind.RUNNABLE_START, inst, rid)
                run.complete_runnable(t, inst, rid)
            run.transition(t, EventKind.TERMINATE, inst)

    trace = run.finish()
    logger.info("zero-time simulation: %d events over %d ticks", len(trace.events), horizon)
    return trace


def simulate_model(model: SystemModel, horizon: Optional[Tick] = None,
                   detail: Optional[TraceDetail] = None) -> Trace:
    """Simulate under the semantics the model's configuration selects."""
    if model.config.semantics is Semantics.ZERO_TIME:
        return simulate_zero_time(model, horizon, detail)
    return simulate(model, horizon, detail)


def derive_gantt(trace: Trace) -> Dict[str, List[Segment]]:
    """
    Rebuild per-task execution segments from a trace's events.

    Segments still open when the events run out are closed at the trace
    horizon. Zero-length segments (zero-time runs) are dropped.

    Raises:
        TraceError: If starts and stops do not alternate, or two tasks
            execute at once
    """
    return segments_from_events(trace.events, trace.horizon, trace.tasks)


def segments_from_events(
    events: Iterable[TraceEvent],
    end: Optional[Tick] = None,
    tasks: Iterable[str] = (),
) -> Dict[str, List[Segment]]:
    gantt: Dict[str, List[Segment]] = {task: [] for task in tasks}
    open_segment: Dict[str, Tuple[Tick, str]] = {}
    current: Dict[str, Optional[str]] = {}
    active: Dict[str, bool] = {}
    last = 0

    def close(task: str, t: Tick) -> None:
        start, rid = open_segment.pop(task)
        if t > start:
            gantt.setdefault(task, []).append(Segment(start, t, rid))

    def open_(task: str, t: Tick, rid: str) -> None:
        if open_segment:
            other = next(iter(open_segment))
            raise TraceError(f"t={t}: {task} starts executing while {other} is executing")
        open_segment[task] = (t, rid)

    for ev in events:
        task, t = ev.task_id, ev.time
        if t < last:
            raise TraceError(f"t={t}: events out of time order")
        last = t
        gantt.setdefault(task, [])
        kind = ev.kind
        if kind is EventKind.START:
            if active.get(task):
                raise TraceError(f"t={t}: {task} started while already running")
            active[task] = True
        elif kind is EventKind.RESUME:
            if active.get(task):
                raise TraceError(f"t={t}: {task} resumed while already running")
            active[task] = True
            if current.get(task):
                open_(task, t, current[task])
        elif kind is EventKind.PREEMPT:
            if not active.get(task):
                raise TraceError(f"t={t}: {task} preempted while not running")
            active[task] = False
            if task in open_segment:
                close(task, t)
        elif kind is EventKind.RUNNABLE_START:
            if not active.get(task) or current.get(task) or ev.runnable_id is None:
                raise TraceError(f"t={t}: unexpected RunnableStart of {ev.runnable_id} in {task}")
            current[task] = ev.runnable_id
            open_(task, t, ev.runnable_id)
        elif kind is EventKind.RUNNABLE_END:
            if task not in open_segment or open_segment[task][1] != ev.runnable_id:
                raise TraceError(f"t={t}: RunnableEnd of {ev.runnable_id} in {task} without a start")
            close(task, t)
            current[task] = None
        elif kind is EventKind.TERMINATE:
            if not active.get(task) or current.get(task) or task in open_segment:
                raise TraceError(f"t={t}: {task} terminated with unfinished work")
            active[task] = False

    for task in list(open_segment):
        close(task, end if end is not None else last)
    return gantt
