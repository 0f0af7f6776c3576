"""Runnable behaviour: evaluating action lists against shared data stores."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

from .model import (
    Add,
    Const,
    Delayed,
    Expr,
    LatchDelay,
    Output,
    Read,
    Reg,
    RunnableSpec,
    Sub,
    Tick,
    Write,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AccessEvent:
    """One data-store access; `value` is the value read or written."""

    time: Tick
    task_id: str
    runnable_id: str
    store_id: str
    kind: str  # "R" or "W"
    value: int


@dataclass(frozen=True)
class OutputEvent:
    time: Tick
    task_id: str
    runnable_id: str
    value: int


class StoreState:
    """Current value of every data store of one simulation run."""

    def __init__(self, initial: Iterable[Tuple[str, int]]):
        self._values: Dict[str, int] = dict(initial)

    @classmethod
    def for_model(cls, model) -> "StoreState":
        return cls((s.id, s.initial_value) for s in model.stores)

    def __getitem__(self, store_id: str) -> int:
        return self._values[store_id]

    def __setitem__(self, store_id: str, value: int) -> None:
        if store_id not in self._values:
            raise KeyError(store_id)
        self._values[store_id] = value

    def keys(self):
        return self._values.keys()

    def snapshot(self) -> Dict[str, int]:
        return dict(self._values)


class Register:
    __slots__ = ("current", "delayed")

    def __init__(self, current: int = 0, delayed: int = 0):
        self.current = current
        self.delayed = delayed

    def __repr__(self) -> str:
        return f"Register({self.current}, {self.delayed})"


class RegisterFile:
    """Per-runnable registers; they persist across instances of a runnable."""

    def __init__(self):
        self._banks: Dict[str, Dict[str, Register]] = {}

    def bank(self, runnable_id: str) -> Dict[str, Register]:
        return self._banks.setdefault(runnable_id, {})

    def register(self, runnable_id: str, name: str) -> Register:
        return self.bank(runnable_id).setdefault(name, Register())


def eval_expr(expr: Expr, regs: Dict[str, Register]) -> int:
    """
    Evaluate an expression over one runnable's register bank.

    Unknown registers read as (0, 0); the bank is never modified.
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Reg):
        reg = regs.get(expr.name)
        return reg.current if reg else 0
    if isinstance(expr, Delayed):
        reg = regs.get(expr.name)
        return reg.delayed if reg else 0
    if isinstance(expr, Add):
        return eval_expr(expr.left, regs) + eval_expr(expr.right, regs)
    if isinstance(expr, Sub):
        return eval_expr(expr.left, regs) - eval_expr(expr.right, regs)
    raise TypeError(f"not an expression: {expr!r}")


def run_actions(
    runnable: RunnableSpec,
    store: StoreState,
    regs: RegisterFile,
    t: Tick,
    task_id: str,
) -> Tuple[List[AccessEvent], List[OutputEvent]]:
    """
    Apply a completed runnable instance's actions atomically at tick `t`.

    Actions run in declaration order, except that unit-delay latches are
    applied after every other action.

    Returns:
        The access events and output events produced, in order.
    """
    bank = regs.bank(runnable.id)
    accesses: List[AccessEvent] = []
    outputs: List[OutputEvent] = []
    latches: List[str] = []

    for action in runnable.actions:
        if isinstance(action, Read):
            value = store[action.store]
            regs.register(runnable.id, action.register).current = value
            accesses.append(AccessEvent(t, task_id, runnable.id, action.store, "R", value))
        elif isinstance(action, Write):
            value = eval_expr(action.value, bank)
            store[action.store] = value
            accesses.append(AccessEvent(t, task_id, runnable.id, action.store, "W", value))
        elif isinstance(action, Output):
            outputs.append(OutputEvent(t, task_id, runnable.id, eval_expr(action.value, bank)))
        elif isinstance(action, LatchDelay):
            latches.append(action.register)

    for name in latches:
        reg = regs.register(runnable.id, name)
        reg.delayed = reg.current

    if accesses or outputs:
        logger.debug("t=%d %s: %d accesses, %d outputs", t, runnable.id, len(accesses), len(outputs))
    return accesses, outputs
