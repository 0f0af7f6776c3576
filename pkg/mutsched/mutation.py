"""Mutation operators over task models and first-order mutant generation."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .exceptions import ConfigurationError, EmptyOperatorSetError, MutationError
from .model import (
    Const,
    LatchDelay,
    Read,
    SystemModel,
    TaskSpec,
    Write,
    assign_rm_priorities,
    expr_registers,
    validate,
)

logger = logging.getLogger(__name__)


class OperatorClass(Enum):
    OFFSET = "Offset"
    PERIOD = "Period"
    EXECUTION_TIME = "Execution Time"
    PRECEDENCE = "Precedence"
    PRIORITY = "Priority"
    JITTER = "Jitter"
    SHARED_MEMORY = "Shared Memory"

    @property
    def slug(self) -> str:
        return self.value.lower().replace(" ", "-")


class MutationOperator(Enum):
    ITO = "mITO"
    DTO = "mDTO"
    ITPER = "mITPER"
    DTPER = "mDTPER"
    ITET = "mITET"
    DTET = "mDTET"
    ATPREC = "mATPREC"
    RTPREC = "mRTPREC"
    ARPREC = "mARPREC"
    RRPREC = "mRRPREC"
    ITPRI = "mITPRI"
    DTPRI = "mDTPRI"
    ITJ = "mITJ"
    DTJ = "mDTJ"
    DSM = "mDSM"
    UDSM = "mUDSM"
    RDSM = "mRDSM"
    RSM = "mRSM"
    RMSMR = "mRMSMR"
    RSMR = "mRSMR"

    @property
    def key(self) -> str:
        return self.value

    @property
    def op_class(self) -> OperatorClass:
        return _CLASS[self]

    @property
    def title(self) -> str:
        return _TITLE[self]

    @property
    def takes_delta(self) -> bool:
        return self.op_class in _DELTA_CLASSES

    @classmethod
    def from_key(cls, key: str) -> "MutationOperator":
        for op in cls:
            if op.value.lower() == key.lower():
                return op
        raise KeyError(key)


_O = MutationOperator
_CLASS = {
    _O.ITO: OperatorClass.OFFSET, _O.DTO: OperatorClass.OFFSET,
    _O.ITPER: OperatorClass.PERIOD, _O.DTPER: OperatorClass.PERIOD,
    _O.ITET: OperatorClass.EXECUTION_TIME, _O.DTET: OperatorClass.EXECUTION_TIME,
    _O.ATPREC: OperatorClass.PRECEDENCE, _O.RTPREC: OperatorClass.PRECEDENCE,
    _O.ARPREC: OperatorClass.PRECEDENCE, _O.RRPREC: OperatorClass.PRECEDENCE,
    _O.ITPRI: OperatorClass.PRIORITY, _O.DTPRI: OperatorClass.PRIORITY,
    _O.ITJ: OperatorClass.JITTER, _O.DTJ: OperatorClass.JITTER,
    _O.DSM: OperatorClass.SHARED_MEMORY, _O.UDSM: OperatorClass.SHARED_MEMORY,
    _O.RDSM: OperatorClass.SHARED_MEMORY, _O.RSM: OperatorClass.SHARED_MEMORY,
    _O.RMSMR: OperatorClass.SHARED_MEMORY, _O.RSMR: OperatorClass.SHARED_MEMORY,
}
_TITLE = {
    _O.ITO: "Increase Task Offset", _O.DTO: "Decrease Task Offset",
    _O.ITPER: "Increase Task Period", _O.DTPER: "Decrease Task Period",
    _O.ITET: "Increase Task Execution Time", _O.DTET: "Decrease Task Execution Time",
    _O.ATPREC: "Add Task Precedence", _O.RTPREC: "Remove Task Precedence",
    _O.ARPREC: "Add Runnable Precedence", _O.RRPREC: "Remove Runnable Precedence",
    _O.ITPRI: "Increase Task Priority", _O.DTPRI: "Decrease Task Priority",
    _O.ITJ: "Increase Task Jitter", _O.DTJ: "Decrease Task Jitter",
    _O.DSM: "Define Shared Memory", _O.UDSM: "Un-define Shared Memory",
    _O.RDSM: "Remove Definition Shared Memory", _O.RSM: "Reference a Shared Memory",
    _O.RMSMR: "Remove a Shared Memory Reference", _O.RSMR: "Replace a Shared Memory Reference",
}
_DELTA_CLASSES = {
    OperatorClass.OFFSET,
    OperatorClass.PERIOD,
    OperatorClass.EXECUTION_TIME,
    OperatorClass.PRIORITY,
    OperatorClass.JITTER,
}
# (field, sign) of the task-level numeric operators
_TASK_FIELD = {
    _O.ITO: ("offset", 1), _O.DTO: ("offset", -1),
    _O.ITPER: ("period", 1), _O.DTPER: ("period", -1),
    _O.ITPRI: ("priority", 1), _O.DTPRI: ("priority", -1),
    _O.ITJ: ("jitter", 1), _O.DTJ: ("jitter", -1),
}

ALL_OPERATORS: Tuple[MutationOperator, ...] = tuple(MutationOperator)


def parse_operator_set(spec: str) -> Tuple[MutationOperator, ...]:
    """
    Parse a comma-separated operator selection.

    Accepts operator keys (``mITO``), class names (``offset``,
    ``execution-time``, ``shared-memory``...), ``all`` and ``none``.
    """
    chosen: List[MutationOperator] = []
    for item in (s.strip() for s in spec.split(",")):
        if not item or item.lower() == "none":
            continue
        if item.lower() == "all":
            chosen.extend(ALL_OPERATORS)
            continue
        matches = [op for op in ALL_OPERATORS if op.op_class.slug == item.lower().replace("_", "-")]
        if not matches:
            try:
                matches = [MutationOperator.from_key(item)]
            except KeyError:
                raise ConfigurationError(f"unknown mutation operator or class: {item}")
        chosen.extend(matches)
    return tuple(op for op in ALL_OPERATORS if op in chosen)


@dataclass(frozen=True)
class DeltaConfig:
    """δ values enumerated per operator class, plus mRSM placement."""

    deltas: Dict[OperatorClass, Tuple[int, ...]] = field(default_factory=lambda: {
        OperatorClass.OFFSET: (1, 2, 3),
        OperatorClass.PERIOD: (1, 2, 3),
        OperatorClass.EXECUTION_TIME: (1, 2, 3),
        OperatorClass.PRIORITY: (1, 2, 3),
        OperatorClass.JITTER: (1, 2, 3),
    })
    mrsm_position: str = "first"

    def __post_init__(self):
        for op_class, values in self.deltas.items():
            if not values:
                raise ConfigurationError(f"no delta values for class {op_class.value}")
            if any(v <= 0 for v in values):
                raise ConfigurationError(f"delta values for {op_class.value} must be positive")
        if self.mrsm_position not in ("first", "last"):
            raise ConfigurationError(f"mrsm_position must be 'first' or 'last', got {self.mrsm_position!r}")

    @classmethod
    def uniform(cls, values: Sequence[int], mrsm_position: str = "first") -> "DeltaConfig":
        return cls({c: tuple(values) for c in _DELTA_CLASSES}, mrsm_position)

    @classmethod
    def from_lists(cls, timing: Sequence[int], priority: Sequence[int],
                   mrsm_position: str = "first") -> "DeltaConfig":
        deltas = {c: tuple(timing) for c in _DELTA_CLASSES if c is not OperatorClass.PRIORITY}
        deltas[OperatorClass.PRIORITY] = tuple(priority)
        return cls(deltas, mrsm_position)

    def for_class(self, op_class: OperatorClass) -> Tuple[int, ...]:
        if op_class not in self.deltas:
            raise ConfigurationError(f"no delta values for class {op_class.value}")
        return self.deltas[op_class]


@dataclass(frozen=True)
class MutationTarget:
    """Mutation site. `other` is the predecessor for precedence operators."""

    task: Optional[str] = None
    runnable: Optional[str] = None
    action_index: Optional[int] = None
    store: Optional[str] = None
    other: Optional[str] = None

    @property
    def path(self) -> str:
        if self.action_index is not None:
            return f"{self.runnable}.{self.action_index}.{self.store}"
        parts = [p for p in (self.task, self.runnable) if p is not None]
        if self.other is not None:
            parts += ["after", self.other]
        elif self.store is not None:
            parts.append(self.store)
        return ".".join(parts)


@dataclass(frozen=True)
class MutationDescriptor:
    operator: MutationOperator
    target: MutationTarget
    delta: Optional[int] = None
    replacement: Optional[str] = None

    @property
    def mutant_id(self) -> str:
        ident = f"{self.operator.key}-{self.target.path}"
        if self.delta is not None:
            ident += f"-d{self.delta}"
        if self.replacement is not None:
            ident += f"-to.{self.replacement}"
        return ident

    @property
    def argument(self) -> str:
        if self.delta is not None:
            return str(self.delta)
        return self.replacement if self.replacement is not None else "-"


@dataclass
class Enumeration:
    descriptors: List[MutationDescriptor]
    inapplicable: Counter

    def __iter__(self) -> Iterator[MutationDescriptor]:
        return iter(self.descriptors)

    def __len__(self) -> int:
        return len(self.descriptors)


# --- application -----------------------------------------------------------

def _task(model: SystemModel, task_id: Optional[str]) -> TaskSpec:
    try:
        return model.task(task_id)  # type: ignore[arg-type]
    except KeyError:
        raise MutationError(f"unknown task {task_id}")


def _action_site(model: SystemModel, d: MutationDescriptor, kind: type):
    target = d.target
    runnable = model.runnables.get(target.runnable or "")
    if runnable is None:
        raise MutationError(f"{d.mutant_id}: unknown runnable {target.runnable}")
    index = target.action_index
    if index is None or not 0 <= index < len(runnable.actions):
        raise MutationError(f"{d.mutant_id}: no action {index} in {runnable.id}")
    action = runnable.actions[index]
    if not isinstance(action, kind) or action.store != target.store:
        raise MutationError(f"{d.mutant_id}: action {index} of {runnable.id} is not a "
                            f"{kind.__name__} of {target.store}")
    return runnable, index, action


def _fresh_register(runnable, base: str) -> str:
    used = set()
    for action in runnable.actions:
        if isinstance(action, (Read, LatchDelay)):
            used.add(action.register)
        elif isinstance(action, Write):
            used.update(expr_registers(action.value))
    name, n = base, 1
    while name in used:
        n += 1
        name = f"{base}_{n}"
    return name


def apply_mutant(model: SystemModel, d: MutationDescriptor) -> SystemModel:
    """
    Apply one mutation descriptor, returning a new model.

    The input model is never modified. Priority operators act on the
    rate-monotonic resolved priorities when a task has none.

    Raises:
        MutationError: If the descriptor does not fit the model or the mutant
            violates a model invariant (the message gives the reason)
    """
    op = d.operator
    target = d.target
    if op.takes_delta and (d.delta is None or d.delta <= 0):
        raise MutationError(f"{op.key}: delta must be a positive integer")

    if op in _TASK_FIELD:
        task = _task(model, target.task)
        name, sign = _TASK_FIELD[op]
        value = getattr(task, name)
        if value is None:
            # only the target gets its implicit priority written out
            value = assign_rm_priorities(model).task(task.id).priority
        mutant = model.replace_task(replace(task, **{name: value + sign * d.delta}))

    elif op in (_O.ITET, _O.DTET):
        task = _task(model, target.task)
        sign = 1 if op is _O.ITET else -1
        if target.runnable is not None:
            if target.runnable not in task.runnables:
                raise MutationError(f"{d.mutant_id}: {target.runnable} is not a runnable of {task.id}")
            chosen: Iterable[str] = (target.runnable,)
        else:
            chosen = task.runnables
        mutant = model
        for rid in chosen:
            runnable = model.runnables[rid]
            mutant = mutant.replace_runnable(replace(runnable, wcet=runnable.wcet + sign * d.delta))

    elif op in (_O.ATPREC, _O.RTPREC):
        task = _task(model, target.task)
        if op is _O.ATPREC:
            if target.other in task.precedence:
                raise MutationError(f"{d.mutant_id}: {target.other} already precedes {task.id}")
            precedence = task.precedence + (target.other,)
        else:
            if target.other not in task.precedence:
                raise MutationError(f"{d.mutant_id}: {target.other} does not precede {task.id}")
            precedence = tuple(p for p in task.precedence if p != target.other)
        mutant = model.replace_task(replace(task, precedence=precedence))

    elif op in (_O.ARPREC, _O.RRPREC):
        runnable = model.runnables.get(target.runnable or "")
        if runnable is None:
            raise MutationError(f"{d.mutant_id}: unknown runnable {target.runnable}")
        if op is _O.ARPREC:
            if target.other in runnable.precedence:
                raise MutationError(f"{d.mutant_id}: {target.other} already precedes {runnable.id}")
            precedence = runnable.precedence + (target.other,)
        else:
            if target.other not in runnable.precedence:
                raise MutationError(f"{d.mutant_id}: {target.other} does not precede {runnable.id}")
            precedence = tuple(p for p in runnable.precedence if p != target.other)
        mutant = model.replace_runnable(replace(runnable, precedence=precedence))

    elif op is _O.DSM:
        runnable, index, action = _action_site(model, d, Read)
        default = Write(action.store, Const(model.store(action.store).initial_value))
        actions = runnable.actions[:index] + (default,) + runnable.actions[index:]
        mutant = model.replace_runnable(replace(runnable, actions=actions))

    elif op in (_O.UDSM, _O.RDSM, _O.RMSMR):
        kind = Read if op is _O.RMSMR else Write
        runnable, index, action = _action_site(model, d, kind)
        if op is _O.RDSM and expr_registers(action.value):
            raise MutationError(f"{d.mutant_id}: write is not a constant definition")
        actions = runnable.actions[:index] + runnable.actions[index + 1:]
        mutant = model.replace_runnable(replace(runnable, actions=actions))

    elif op is _O.RSM:
        task = _task(model, target.task)
        rid = target.runnable or task.runnables[0]
        if rid not in task.runnables:
            raise MutationError(f"{d.mutant_id}: {rid} is not a runnable of {task.id}")
        runnable = model.runnables[rid]
        register = _fresh_register(runnable, f"ref_{target.store}")
        actions = runnable.actions + (Read(target.store or "", register),)
        mutant = model.replace_runnable(replace(runnable, actions=actions))

    elif op is _O.RSMR:
        runnable, index, action = _action_site(model, d, Read)
        if d.replacement is None or d.replacement == action.store:
            raise MutationError(f"{d.mutant_id}: replacement store must differ from {action.store}")
        actions = list(runnable.actions)
        actions[index] = Read(d.replacement, action.register)
        mutant = model.replace_runnable(replace(runnable, actions=tuple(actions)))

    else:  # pragma: no cover
        raise MutationError(f"unsupported operator {op}")

    report = validate(mutant)
    if not report.ok:
        raise MutationError(f"{d.mutant_id}: " + "; ".join(v.message for v in report))
    return mutant


# --- enumeration -----------------------------------------------------------

def _sites(model: SystemModel, op: MutationOperator, cfg: DeltaConfig) -> Iterator[MutationDescriptor]:
    tasks = sorted(model.tasks, key=lambda t: t.spawn_index)

    if op in _TASK_FIELD:
        for task in tasks:
            for delta in cfg.for_class(op.op_class):
                yield MutationDescriptor(op, MutationTarget(task=task.id), delta=delta)

    elif op in (_O.ITET, _O.DTET):
        for task in tasks:
            for rid in task.runnables:
                for delta in cfg.for_class(op.op_class):
                    yield MutationDescriptor(op, MutationTarget(task=task.id, runnable=rid), delta=delta)

    elif op is _O.ATPREC:
        for task in tasks:
            for other in tasks:
                if other.id != task.id and other.id not in task.precedence:
                    yield MutationDescriptor(op, MutationTarget(task=task.id, other=other.id))

    elif op is _O.RTPREC:
        for task in tasks:
            for other in task.precedence:
                yield MutationDescriptor(op, MutationTarget(task=task.id, other=other))

    elif op is _O.ARPREC:
        for task in tasks:
            for rid in task.runnables:
                runnable = model.runnables[rid]
                for other in task.runnables:
                    if other != rid and other not in runnable.precedence:
                        yield MutationDescriptor(op, MutationTarget(task=task.id, runnable=rid, other=other))

    elif op is _O.RRPREC:
        for task in tasks:
            for rid in task.runnables:
                for other in model.runnables[rid].precedence:
                    yield MutationDescriptor(op, MutationTarget(task=task.id, runnable=rid, other=other))

    elif op is _O.RSM:
        for task in tasks:
            read = {a.store for rid in task.runnables
                    for a in model.runnables[rid].actions if isinstance(a, Read)}
            rid = task.runnables[0] if cfg.mrsm_position == "first" else task.runnables[-1]
            for store in model.stores:
                if store.id not in read:
                    yield MutationDescriptor(op, MutationTarget(task=task.id, runnable=rid, store=store.id))

    else:
        kind = Write if op in (_O.UDSM, _O.RDSM) else Read
        for task in tasks:
            for rid in task.runnables:
                for index, action in enumerate(model.runnables[rid].actions):
                    if not isinstance(action, kind):
                        continue
                    if op is _O.RDSM and expr_registers(action.value):
                        continue
                    target = MutationTarget(task=task.id, runnable=rid, action_index=index, store=action.store)
                    if op is _O.RSMR:
                        for store in model.stores:
                            if store.id != action.store:
                                yield MutationDescriptor(op, target, replacement=store.id)
                    else:
                        yield MutationDescriptor(op, target)


def survey_mutants(
    model: SystemModel,
    cfg: DeltaConfig,
    enabled: Iterable[MutationOperator],
) -> Enumeration:
    """
    Enumerate applicable first-order mutants and count inapplicable sites.

    Raises:
        EmptyOperatorSetError: If no operator is enabled
    """
    enabled = set(enabled)
    if not enabled:
        raise EmptyOperatorSetError("no mutation operator enabled")
    descriptors: List[MutationDescriptor] = []
    inapplicable: Counter = Counter()
    for op in ALL_OPERATORS:
        if op not in enabled:
            continue
        for d in _sites(model, op, cfg):
            try:
                apply_mutant(model, d)
            except MutationError as e:
                logger.debug("excluded %s", e)
                inapplicable[op.op_class] += 1
                continue
            descriptors.append(d)
    logger.info("enumerated %d mutants (%d inapplicable sites)",
                len(descriptors), sum(inapplicable.values()))
    return Enumeration(descriptors, inapplicable)


def enumerate_mutants(
    model: SystemModel,
    cfg: DeltaConfig,
    enabled: Iterable[MutationOperator],
) -> List[MutationDescriptor]:
    """Every applicable first-order mutant, in operator, task, site and δ order."""
    return survey_mutants(model, cfg, enabled).descriptors
