"""Task model: tasks, runnables, shared data stores and simulation settings.

A model file is UTF-8 JSON tagged with ``"schema": "mutsched/1"``::

    {
      "schema": "mutsched/1",
      "resolution_us": 1000,
      "simulation": {"semantics": "time-aware", "horizon": 20},
      "tasks": [{"id": "T1", "offset": 0, "period": 10, "priority": 2,
                 "jitter": 0, "runnables": ["R1"]}],
      "runnables": [{"id": "R1", "wcet": 3,
                     "actions": [{"write": "A", "value": 10}]}],
      "stores": [{"id": "A", "init": 0}]
    }
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum, Flag
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx

from .exceptions import ModelError, ModelValidationError

logger = logging.getLogger(__name__)

SCHEMA = "mutsched/1"

# One tick is `resolution_us` microseconds; every duration in a model shares it.
Tick = int


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Reg:
    name: str


@dataclass(frozen=True)
class Delayed:
    """Unit-delay shadow of a register."""
    name: str


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Reg, Delayed, Add, Sub]


def expr_registers(expr: Expr) -> Tuple[str, ...]:
    """Return the registers an expression refers to, in first-use order."""
    if isinstance(expr, (Reg, Delayed)):
        return (expr.name,)
    if isinstance(expr, (Add, Sub)):
        seen = list(expr_registers(expr.left))
        for name in expr_registers(expr.right):
            if name not in seen:
                seen.append(name)
        return tuple(seen)
    return ()


# --- actions ---------------------------------------------------------------

@dataclass(frozen=True)
class Read:
    store: str
    register: str


@dataclass(frozen=True)
class Write:
    store: str
    value: Expr


@dataclass(frozen=True)
class Output:
    value: Expr


@dataclass(frozen=True)
class LatchDelay:
    register: str


Action = Union[Read, Write, Output, LatchDelay]


# --- specifications --------------------------------------------------------

class Semantics(Enum):
    TIME_AWARE = "time-aware"
    ZERO_TIME = "zero-time"


class TraceDetail(Flag):
    NONE = 0
    GANTT = 1
    ACCESSES = 2
    OUTPUTS = 4
    ALL = GANTT | ACCESSES | OUTPUTS


_DETAIL_NAMES = {
    "gantt": TraceDetail.GANTT,
    "accesses": TraceDetail.ACCESSES,
    "outputs": TraceDetail.OUTPUTS,
}


@dataclass(frozen=True)
class TaskSpec:
    """A periodic task; its deadline is implicitly its period."""

    id: str
    period: Tick
    runnables: Tuple[str, ...]
    offset: Tick = 0
    jitter: Tick = 0
    priority: Optional[int] = None
    precedence: Tuple[str, ...] = ()
    spawn_index: int = 0


@dataclass(frozen=True)
class RunnableSpec:
    id: str
    wcet: Tick
    actions: Tuple[Action, ...] = ()
    precedence: Tuple[str, ...] = ()


@dataclass(frozen=True)
class DataStoreSpec:
    id: str
    initial_value: int = 0


@dataclass(frozen=True)
class SimConfig:
    semantics: Semantics = Semantics.TIME_AWARE
    horizon: Optional[Tick] = None
    trace_detail: TraceDetail = TraceDetail.ALL


@dataclass(frozen=True)
class SystemModel:
    """A complete task set. Treat instances (and the runnable map) as read-only."""

    tasks: Tuple[TaskSpec, ...]
    runnables: Dict[str, RunnableSpec]
    stores: Tuple[DataStoreSpec, ...] = ()
    config: SimConfig = field(default_factory=SimConfig)
    resolution_us: int = 1000

    def task(self, task_id: str) -> TaskSpec:
        for task in self.tasks:
            if task.id == task_id:
                return task
        raise KeyError(task_id)

    def task_ids(self) -> Tuple[str, ...]:
        return tuple(t.id for t in self.tasks)

    def store_ids(self) -> Tuple[str, ...]:
        return tuple(s.id for s in self.stores)

    def store(self, store_id: str) -> DataStoreSpec:
        for store in self.stores:
            if store.id == store_id:
                return store
        raise KeyError(store_id)

    def task_of(self, runnable_id: str) -> str:
        for task in self.tasks:
            if runnable_id in task.runnables:
                return task.id
        raise KeyError(runnable_id)

    def task_wcet(self, task_id: str) -> Tick:
        """Task WCET c: the sum of its runnables' execution budgets."""
        return sum(self.runnables[r].wcet for r in self.task(task_id).runnables)

    def replace_task(self, task: TaskSpec) -> "SystemModel":
        tasks = tuple(task if t.id == task.id else t for t in self.tasks)
        return replace(self, tasks=tasks)

    def replace_runnable(self, runnable: RunnableSpec) -> "SystemModel":
        runnables = dict(self.runnables)
        runnables[runnable.id] = runnable
        return replace(self, runnables=runnables)


def make_model(
    tasks: Sequence[TaskSpec],
    runnables: Iterable[RunnableSpec],
    stores: Sequence[DataStoreSpec] = (),
    config: Optional[SimConfig] = None,
    resolution_us: int = 1000,
) -> SystemModel:
    """Build a model, numbering spawn order from declaration order."""
    return SystemModel(
        tasks=tuple(replace(t, spawn_index=i) for i, t in enumerate(tasks)),
        runnables={r.id: r for r in runnables},
        stores=tuple(stores),
        config=config or SimConfig(),
        resolution_us=resolution_us,
    )


# --- validation ------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)


def _action_stores(action: Action) -> Tuple[str, ...]:
    if isinstance(action, (Read, Write)):
        return (action.store,)
    return ()


def _cycle_of(edges: Iterable[Tuple[str, str]]) -> Optional[List[str]]:
    graph = nx.DiGraph()
    graph.add_edges_from(edges)
    if nx.is_directed_acyclic_graph(graph):
        return None
    return [u for u, _ in nx.find_cycle(graph)]


def validate(model: SystemModel) -> ValidationReport:
    """
    Check every task-model invariant.

    Returns:
        A report listing all violations; it is empty iff the model is simulable.
    """
    found: List[Violation] = []

    def add(code: str, subject: str, message: str) -> None:
        found.append(Violation(code, subject, message))

    if not model.tasks:
        add("empty-task-set", "", "empty task set")
    if model.resolution_us <= 0:
        add("resolution", "", "resolution must be positive")
    if model.config.horizon is not None and model.config.horizon <= 0:
        add("horizon", "", "horizon must be positive")

    task_ids = [t.id for t in model.tasks]
    for dup in sorted({i for i in task_ids if task_ids.count(i) > 1}):
        add("duplicate-id", dup, f"duplicate task id {dup}")
    store_ids = [s.id for s in model.stores]
    for dup in sorted({i for i in store_ids if store_ids.count(i) > 1}):
        add("duplicate-id", dup, f"duplicate store id {dup}")
    spawn = [t.spawn_index for t in model.tasks]
    if len(set(spawn)) != len(spawn):
        add("spawn-index", "", "spawn indices must be unique")

    owner: Dict[str, str] = {}
    for task in model.tasks:
        tid = task.id
        if task.period <= 0:
            add("period", tid, f"task {tid}: period must be positive")
        if task.offset < 0:
            add("offset", tid, f"task {tid}: offset must be non-negative")
        if task.jitter < 0:
            add("jitter", tid, f"task {tid}: jitter must be non-negative")
        elif task.period > 0 and task.jitter >= task.period:
            add("jitter", tid, f"task {tid}: jitter must be smaller than the period")
        if not task.runnables:
            add("no-runnables", tid, f"task {tid}: runnable list is empty")
        for rid in task.runnables:
            if rid not in model.runnables:
                add("unknown-runnable", tid, f"task {tid}: unknown runnable {rid}")
            elif rid in owner:
                add("multi-mapped", rid,
                    f"runnable {rid} mapped to both {owner[rid]} and {tid}")
            else:
                owner[rid] = tid
        if len(set(task.precedence)) != len(task.precedence):
            add("duplicate-precedence", tid, f"task {tid}: duplicate precedence entry")
        for pred in task.precedence:
            if pred == tid:
                add("self-precedence", tid, f"task {tid}: self-precedence")
            elif pred not in task_ids:
                add("unknown-task", tid, f"task {tid}: precedence names unknown task {pred}")

    for rid, runnable in model.runnables.items():
        if runnable.id != rid:
            add("runnable-key", rid, f"runnable {rid}: key does not match id {runnable.id}")
        if runnable.wcet <= 0:
            add("wcet", rid, f"runnable {rid}: wcet must be positive")
        if rid not in owner:
            add("unmapped", rid, f"runnable {rid} is not mapped to any task")
        if len(set(runnable.precedence)) != len(runnable.precedence):
            add("duplicate-precedence", rid, f"runnable {rid}: duplicate precedence entry")
        for pred in runnable.precedence:
            if pred == rid:
                add("self-precedence", rid, f"runnable {rid}: self-precedence")
            elif pred not in model.runnables:
                add("unknown-runnable", rid,
                    f"runnable {rid}: precedence names unknown runnable {pred}")
            elif rid in owner and owner.get(pred) != owner[rid]:
                add("cross-task-precedence", rid,
                    f"runnable {rid}: cross-task runnable precedence on {pred}")
        for index, action in enumerate(runnable.actions):
            for sid in _action_stores(action):
                if sid not in store_ids:
                    add("unknown-store", rid,
                        f"runnable {rid}: action {index} names unknown store {sid}")

    task_edges = [(p, t.id) for t in model.tasks for p in t.precedence
                  if p in task_ids and p != t.id]
    cycle = _cycle_of(task_edges)
    if cycle:
        add("precedence-cycle", cycle[0], "task precedence cycle: " + " -> ".join(cycle))
    runnable_edges = [(p, r.id) for r in model.runnables.values() for p in r.precedence
                      if p in model.runnables and p != r.id]
    cycle = _cycle_of(runnable_edges)
    if cycle:
        add("precedence-cycle", cycle[0], "runnable precedence cycle: " + " -> ".join(cycle))

    return ValidationReport(tuple(found))


# --- derived quantities ----------------------------------------------------

def hyperperiod(model: SystemModel) -> Tick:
    """Least common multiple of all task periods."""
    return math.lcm(*(t.period for t in model.tasks))


def default_horizon(model: SystemModel) -> Tick:
    """Two hyperperiods past the latest first release."""
    return 2 * hyperperiod(model) + max(t.offset + t.jitter for t in model.tasks)


def assign_rm_priorities(model: SystemModel) -> SystemModel:
    """
    Give every task without an explicit priority a rate-monotonic one.

    Ranks are taken over the distinct periods of all tasks, so shorter periods
    get larger priorities and equal periods share a priority (dispatched in
    spawn order). Explicit priorities are left untouched and a task keeps the
    same rank whether or not its neighbours were resolved first.
    """
    if all(t.priority is not None for t in model.tasks):
        return model
    periods = sorted({t.period for t in model.tasks}, reverse=True)
    rank = {period: i + 1 for i, period in enumerate(periods)}
    tasks = tuple(
        replace(t, priority=rank[t.period]) if t.priority is None else t
        for t in model.tasks
    )
    return replace(model, tasks=tasks)


# --- model files -----------------------------------------------------------

def _field(obj: Mapping[str, Any], key: str, path: str, kind: type, default: Any = ...) -> Any:
    if key not in obj:
        if default is ...:
            raise ModelError(f"{path}.{key}: missing required field")
        return default
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ModelError(f"{path}.{key}: expected integer, got {value!r}")
    if kind is str and not isinstance(value, str):
        raise ModelError(f"{path}.{key}: expected string, got {value!r}")
    if kind is list and not isinstance(value, list):
        raise ModelError(f"{path}.{key}: expected list, got {value!r}")
    if kind is dict and not isinstance(value, dict):
        raise ModelError(f"{path}.{key}: expected object, got {value!r}")
    return value


def _str_list(obj: Mapping[str, Any], key: str, path: str) -> Tuple[str, ...]:
    items = _field(obj, key, path, list, [])
    for i, item in enumerate(items):
        if not isinstance(item, str):
            raise ModelError(f"{path}.{key}[{i}]: expected string, got {item!r}")
    return tuple(items)


def parse_expr(data: Any, path: str = "expr") -> Expr:
    if isinstance(data, bool):
        raise ModelError(f"{path}: expected expression, got {data!r}")
    if isinstance(data, int):
        return Const(data)
    if isinstance(data, dict) and len(data) == 1:
        (op, arg), = data.items()
        if op in ("reg", "delayed"):
            if not isinstance(arg, str):
                raise ModelError(f"{path}.{op}: expected register name")
            return Reg(arg) if op == "reg" else Delayed(arg)
        if op in ("add", "sub"):
            if not isinstance(arg, list) or len(arg) != 2:
                raise ModelError(f"{path}.{op}: expected two operands")
            left = parse_expr(arg[0], f"{path}.{op}[0]")
            right = parse_expr(arg[1], f"{path}.{op}[1]")
            return Add(left, right) if op == "add" else Sub(left, right)
    raise ModelError(f"{path}: unrecognized expression {data!r}")


def parse_action(data: Any, path: str) -> Action:
    if not isinstance(data, dict):
        raise ModelError(f"{path}: expected object, got {data!r}")
    if "read" in data:
        return Read(_field(data, "read", path, str), _field(data, "into", path, str))
    if "write" in data:
        if "value" not in data:
            raise ModelError(f"{path}.value: missing required field")
        return Write(_field(data, "write", path, str), parse_expr(data["value"], f"{path}.value"))
    if "output" in data:
        return Output(parse_expr(data["output"], f"{path}.output"))
    if "latch" in data:
        return LatchDelay(_field(data, "latch", path, str))
    raise ModelError(f"{path}: unrecognized action {data!r}")


def _parse_simulation(data: Mapping[str, Any]) -> SimConfig:
    path = "simulation"
    raw = _field(data, "semantics", path, str, Semantics.TIME_AWARE.value)
    try:
        semantics = Semantics(raw)
    except ValueError:
        raise ModelError(f"{path}.semantics: unknown semantics {raw!r}")
    horizon = data.get("horizon")
    if horizon is not None:
        horizon = _field(data, "horizon", path, int)
    detail = TraceDetail.ALL
    if "trace" in data:
        detail = TraceDetail.NONE
        for name in _str_list(data, "trace", path):
            if name not in _DETAIL_NAMES:
                raise ModelError(f"{path}.trace: unknown trace detail {name!r}")
            detail |= _DETAIL_NAMES[name]
    return SimConfig(semantics=semantics, horizon=horizon, trace_detail=detail)


def parse_model(text: str) -> SystemModel:
    """
    Parse and validate a model file.

    Args:
        text: Model-file content (JSON, schema ``mutsched/1``)

    Returns:
        The declared SystemModel; tasks without ``priority`` keep ``None``
        until assign_rm_priorities resolves them.

    Raises:
        ModelError: On syntax errors, bad field types or duplicate runnables
        ModelValidationError: When the model violates an invariant
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"line {e.lineno}, column {e.colno}: {e.msg}")
    if not isinstance(data, dict):
        raise ModelError("model file must contain a JSON object")
    schema = data.get("schema")
    if schema != SCHEMA:
        raise ModelError(f"schema: expected {SCHEMA!r}, got {schema!r}")

    resolution = _field(data, "resolution_us", "model", int, 1000)

    runnables: List[RunnableSpec] = []
    seen = set()
    for i, raw in enumerate(_field(data, "runnables", "model", list, [])):
        path = f"runnables[{i}]"
        if not isinstance(raw, dict):
            raise ModelError(f"{path}: expected object")
        rid = _field(raw, "id", path, str)
        if rid in seen:
            raise ModelError(f"{path}.id: duplicate runnable id {rid}")
        seen.add(rid)
        actions = tuple(
            parse_action(a, f"{path}.actions[{j}]")
            for j, a in enumerate(_field(raw, "actions", path, list, []))
        )
        runnables.append(RunnableSpec(
            id=rid,
            wcet=_field(raw, "wcet", path, int),
            actions=actions,
            precedence=_str_list(raw, "after", path),
        ))

    tasks: List[TaskSpec] = []
    for i, raw in enumerate(_field(data, "tasks", "model", list, [])):
        path = f"tasks[{i}]"
        if not isinstance(raw, dict):
            raise ModelError(f"{path}: expected object")
        priority = raw.get("priority")
        if priority is not None:
            priority = _field(raw, "priority", path, int)
        tasks.append(TaskSpec(
            id=_field(raw, "id", path, str),
            period=_field(raw, "period", path, int),
            runnables=_str_list(raw, "runnables", path),
            offset=_field(raw, "offset", path, int, 0),
            jitter=_field(raw, "jitter", path, int, 0),
            priority=priority,
            precedence=_str_list(raw, "precedes_after", path),
        ))

    stores = []
    for i, raw in enumerate(_field(data, "stores", "model", list, [])):
        path = f"stores[{i}]"
        if not isinstance(raw, dict):
            raise ModelError(f"{path}: expected object")
        stores.append(DataStoreSpec(_field(raw, "id", path, str), _field(raw, "init", path, int, 0)))

    config = _parse_simulation(_field(data, "simulation", "model", dict, {}))
    model = make_model(tasks, runnables, stores, config, resolution)
    report = validate(model)
    if not report.ok:
        raise ModelValidationError(report)
    logger.debug("parsed model with %d tasks, %d runnables", len(model.tasks), len(model.runnables))
    return model


def expr_to_data(expr: Expr) -> Any:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Reg):
        return {"reg": expr.name}
    if isinstance(expr, Delayed):
        return {"delayed": expr.name}
    op = "add" if isinstance(expr, Add) else "sub"
    return {op: [expr_to_data(expr.left), expr_to_data(expr.right)]}


def action_to_data(action: Action) -> Dict[str, Any]:
    if isinstance(action, Read):
        return {"read": action.store, "into": action.register}
    if isinstance(action, Write):
        return {"write": action.store, "value": expr_to_data(action.value)}
    if isinstance(action, Output):
        return {"output": expr_to_data(action.value)}
    return {"latch": action.register}


def model_to_dict(model: SystemModel) -> Dict[str, Any]:
    simulation: Dict[str, Any] = {
        "semantics": model.config.semantics.value,
        "horizon": model.config.horizon,
        "trace": [n for n, flag in _DETAIL_NAMES.items() if flag & model.config.trace_detail],
    }
    tasks = []
    for task in sorted(model.tasks, key=lambda t: t.spawn_index):
        entry: Dict[str, Any] = {
            "id": task.id,
            "offset": task.offset,
            "period": task.period,
        }
        if task.priority is not None:
            entry["priority"] = task.priority
        entry["jitter"] = task.jitter
        if task.precedence:
            entry["precedes_after"] = list(task.precedence)
        entry["runnables"] = list(task.runnables)
        tasks.append(entry)
    runnables = []
    for runnable in model.runnables.values():
        entry = {
            "id": runnable.id,
            "wcet": runnable.wcet,
            "actions": [action_to_data(a) for a in runnable.actions],
        }
        if runnable.precedence:
            entry["after"] = list(runnable.precedence)
        runnables.append(entry)
    return {
        "schema": SCHEMA,
        "resolution_us": model.resolution_us,
        "simulation": simulation,
        "tasks": tasks,
        "runnables": runnables,
        "stores": [{"id": s.id, "init": s.initial_value} for s in model.stores],
    }


def serialize_model(model: SystemModel) -> str:
    """Render a model in the model-file schema (stable, newline-terminated)."""
    return json.dumps(model_to_dict(model), indent=2) + "\n"
