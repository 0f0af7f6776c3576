"""Mutation campaigns: simulate mutants, apply kill oracles and score them."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from functools import partial
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .engine import Trace, simulate, simulate_zero_time
from .exceptions import AnalysisError, ConfigurationError
from .export import format_table
from .model import Semantics, SystemModel, Tick, TraceDetail, default_horizon
from .mutation import (
    DeltaConfig,
    MutationDescriptor,
    MutationOperator,
    OperatorClass,
    apply_mutant,
    survey_mutants,
)

logger = logging.getLogger(__name__)

UNDEFINED_SCORE = "—"
NOT_APPLICABLE = "N/A"


class Oracle(Enum):
    DEADLINE = "deadline"
    ACCESS = "access"
    OUTPUT = "output"

    @property
    def reason(self) -> "KillReason":
        return _REASON[self]


class KillReason(Enum):
    DEADLINE_MISS = "DeadlineMiss"
    ACCESS_DIVERGENCE = "AccessSequenceDivergence"
    OUTPUT_DIVERGENCE = "OutputDivergence"


_REASON = {
    Oracle.DEADLINE: KillReason.DEADLINE_MISS,
    Oracle.ACCESS: KillReason.ACCESS_DIVERGENCE,
    Oracle.OUTPUT: KillReason.OUTPUT_DIVERGENCE,
}
ALL_ORACLES: FrozenSet[Oracle] = frozenset(Oracle)


def parse_oracles(spec: str) -> FrozenSet[Oracle]:
    try:
        return frozenset(Oracle(s.strip().lower()) for s in spec.split(",") if s.strip())
    except ValueError as e:
        raise ConfigurationError(f"unknown oracle: {e}")


class Status(Enum):
    KILLED = "Killed"
    SURVIVED = "Survived"


@dataclass(frozen=True)
class Verdict:
    reasons: FrozenSet[KillReason] = frozenset()
    first_failure: Optional[Tick] = None

    @property
    def status(self) -> Status:
        return Status.KILLED if self.reasons else Status.SURVIVED

    @property
    def killed(self) -> bool:
        return bool(self.reasons)

    def reason_text(self) -> str:
        ordered = [r.value for r in KillReason if r in self.reasons]
        return "+".join(ordered) if ordered else "-"


# --- oracles ----------------------------------------------------------------

def access_sequence(trace: Trace, store_id: str) -> str:
    """
    The R/W kinds of every access to `store_id`, in trace order.

    Raises:
        AnalysisError: If the store is not part of the trace's namespace
    """
    if store_id not in trace.stores:
        raise AnalysisError(f"unknown store {store_id}")
    return "".join(a.kind for a in trace.accesses if a.store_id == store_id)


def _access_times(trace: Trace, store_id: str) -> List[Tick]:
    return [a.time for a in trace.accesses if a.store_id == store_id]


def output_sequences(trace: Trace) -> Dict[str, Tuple[int, ...]]:
    """Per-runnable output values in completion order, time abstracted away."""
    seqs: Dict[str, List[int]] = {}
    for o in trace.outputs:
        seqs.setdefault(o.runnable_id, []).append(o.value)
    return {rid: tuple(values) for rid, values in seqs.items()}


def _divergence_time(base: Sequence, mut: Sequence, base_times: Sequence[Tick],
                     mut_times: Sequence[Tick]) -> Optional[Tick]:
    for i, (a, b) in enumerate(zip(base, mut)):
        if a != b:
            return mut_times[i]
    if len(base) == len(mut):
        return None
    i = min(len(base), len(mut))
    return mut_times[i] if len(mut) > i else base_times[i]


def schedulable(trace: Trace) -> bool:
    return not trace.deadline_misses()


def compare(baseline: Trace, mutant: Trace, policy: Iterable[Oracle] = ALL_ORACLES) -> Verdict:
    """
    Judge a mutant trace against the baseline trace.

    The deadline oracle fires on deadline misses the baseline does not
    share, the access oracle on any store whose R/W sequence differs and
    the output oracle on any runnable whose output value sequence differs.

    Raises:
        AnalysisError: If the traces do not share their store and runnable
            namespace
    """
    if set(baseline.stores) != set(mutant.stores) or set(baseline.runnables) != set(mutant.runnables):
        raise AnalysisError("baseline and mutant traces have different store or runnable namespaces")
    policy = frozenset(policy)
    reasons = set()
    failures: List[Tick] = []

    if Oracle.DEADLINE in policy:
        known = {(e.time, e.task_id, e.instance) for e in baseline.deadline_misses()}
        new = [e.time for e in mutant.deadline_misses() if (e.time, e.task_id, e.instance) not in known]
        if new:
            reasons.add(KillReason.DEADLINE_MISS)
            failures.append(min(new))

    if Oracle.ACCESS in policy:
        for store in baseline.stores:
            base, mut = access_sequence(baseline, store), access_sequence(mutant, store)
            if base != mut:
                reasons.add(KillReason.ACCESS_DIVERGENCE)
                t = _divergence_time(base, mut, _access_times(baseline, store), _access_times(mutant, store))
                if t is not None:
                    failures.append(t)

    if Oracle.OUTPUT in policy:
        base_out, mut_out = output_sequences(baseline), output_sequences(mutant)
        for rid in sorted(set(base_out) | set(mut_out)):
            base, mut = base_out.get(rid, ()), mut_out.get(rid, ())
            if base != mut:
                reasons.add(KillReason.OUTPUT_DIVERGENCE)
                t = _divergence_time(
                    base, mut,
                    [o.time for o in baseline.outputs if o.runnable_id == rid],
                    [o.time for o in mutant.outputs if o.runnable_id == rid],
                )
                if t is not None:
                    failures.append(t)

    return Verdict(frozenset(reasons), min(failures) if failures else None)


# --- reports ----------------------------------------------------------------

@dataclass(frozen=True)
class MutantRow:
    mutant_id: str
    operator: MutationOperator
    verdict: Verdict

    @property
    def op_class(self) -> OperatorClass:
        return self.operator.op_class


@dataclass
class ClassSummary:
    op_class: OperatorClass
    mutants: int = 0
    inapplicable: int = 0
    kills: Dict[KillReason, int] = field(default_factory=lambda: {r: 0 for r in KillReason})
    kills_total: int = 0
    not_applicable: bool = False

    def add(self, row: MutantRow) -> None:
        self.mutants += 1
        for reason in row.verdict.reasons:
            self.kills[reason] += 1
        if row.verdict.killed:
            self.kills_total += 1


@dataclass
class CampaignReport:
    semantics: Semantics
    baseline: str
    horizon: Tick
    classes: Dict[OperatorClass, ClassSummary]
    rows: List[MutantRow]

    @property
    def mutants(self) -> int:
        return len(self.rows)

    @property
    def kills(self) -> int:
        return sum(1 for r in self.rows if r.verdict.killed)

    @property
    def inapplicable(self) -> int:
        return sum(c.inapplicable for c in self.classes.values())

    def summary(self, op_class: OperatorClass) -> ClassSummary:
        return self.classes[op_class]


def mutation_score(report: CampaignReport) -> Fraction:
    """
    Killed mutants over generated mutants, as an exact fraction.

    Raises:
        AnalysisError: If the campaign generated no mutant
    """
    if report.mutants == 0:
        raise AnalysisError("mutation score is undefined for a campaign without mutants")
    return Fraction(report.kills, report.mutants)


def format_percentage(score: Fraction) -> str:
    """Render a score as a percentage with two decimals, rounding half up."""
    pct = (Decimal(score.numerator) * 100 / Decimal(score.denominator)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP)
    return f"{pct}%"


def _score_cell(kills: int, mutants: int) -> str:
    return format_percentage(Fraction(kills, mutants)) if mutants else UNDEFINED_SCORE


def score_text(report: CampaignReport) -> str:
    try:
        return format_percentage(mutation_score(report))
    except AnalysisError:
        return UNDEFINED_SCORE


# --- campaigns --------------------------------------------------------------

def _simulator(semantics: Semantics):
    return simulate_zero_time if semantics is Semantics.ZERO_TIME else simulate


def _baseline_semantics(baseline: str, semantics: Semantics) -> Semantics:
    if baseline == "same":
        return semantics
    try:
        return Semantics(baseline)
    except ValueError:
        raise ConfigurationError(f"baseline must be 'same', 'zero-time' or 'time-aware', got {baseline!r}")


def _evaluate(d: MutationDescriptor, model: SystemModel, semantics: Semantics, horizon: Tick,
              base: Trace, policy: FrozenSet[Oracle]) -> MutantRow:
    trace = _simulator(semantics)(apply_mutant(model, d), horizon, TraceDetail.ALL)
    verdict = compare(base, trace, policy)
    logger.debug("%s: %s %s", d.mutant_id, verdict.status.value, verdict.reason_text())
    return MutantRow(d.mutant_id, d.operator, verdict)


def run_campaign(
    model: SystemModel,
    cfg: DeltaConfig,
    enabled: Iterable[MutationOperator],
    policy: Iterable[Oracle] = ALL_ORACLES,
    semantics: Optional[Semantics] = None,
    baseline: str = "same",
    horizon: Optional[Tick] = None,
    workers: int = 1,
) -> CampaignReport:
    """
    Run a first-order mutation campaign over a model.

    Every enumerated mutant is simulated under the campaign semantics with
    the original model's horizon and judged against the baseline trace.
    Under zero-time semantics execution-time operators cannot change a
    trace and their class is reported as not applicable.

    Args:
        model: A valid model
        cfg: δ values and mRSM placement
        enabled: Operators to apply
        policy: Kill oracles
        semantics: Campaign semantics (defaults to the model's setting)
        baseline: "same", "zero-time" or "time-aware"
        horizon: Ticks to simulate (defaults to the model's setting, then
            the default horizon of the original model)
        workers: Number of processes simulating mutants

    Returns:
        The CampaignReport

    Raises:
        EmptyOperatorSetError: If `enabled` is empty
    """
    enabled = tuple(enabled)
    policy = frozenset(policy)
    semantics = semantics or model.config.semantics
    if horizon is None:
        horizon = model.config.horizon if model.config.horizon is not None else default_horizon(model)
    if workers < 1:
        raise ConfigurationError("workers must be at least 1")

    skipped = set()
    if semantics is Semantics.ZERO_TIME:
        skipped = {op for op in enabled if op.op_class is OperatorClass.EXECUTION_TIME}
    active = tuple(op for op in enabled if op not in skipped)

    classes: Dict[OperatorClass, ClassSummary] = {}
    for op_class in OperatorClass:
        if any(op.op_class is op_class for op in enabled):
            classes[op_class] = ClassSummary(op_class, not_applicable=any(
                op.op_class is op_class for op in skipped))

    if active or not enabled:
        survey = survey_mutants(model, cfg, active)
        descriptors = survey.descriptors
        for op_class, count in survey.inapplicable.items():
            classes[op_class].inapplicable = count
    else:
        descriptors = []

    base_semantics = _baseline_semantics(baseline, semantics)
    base = _simulator(base_semantics)(model, horizon, TraceDetail.ALL)
    logger.info("campaign: %d mutants, semantics=%s, baseline=%s, horizon=%d",
                len(descriptors), semantics.value, base_semantics.value, horizon)

    evaluate = partial(_evaluate, model=model, semantics=semantics, horizon=horizon,
                       base=base, policy=policy)
    if workers > 1 and len(descriptors) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, descriptors, chunksize=8))
    else:
        rows = [evaluate(d) for d in descriptors]

    for row in rows:
        classes[row.op_class].add(row)
    report = CampaignReport(semantics, baseline, horizon, classes, rows)
    logger.info("campaign: %d of %d mutants killed", report.kills, report.mutants)
    return report


def run_dual_campaign(
    model: SystemModel,
    cfg: DeltaConfig,
    enabled: Iterable[MutationOperator],
    policy: Iterable[Oracle] = ALL_ORACLES,
    horizon: Optional[Tick] = None,
    workers: int = 1,
) -> Tuple[CampaignReport, CampaignReport]:
    """Run the zero-time and time-aware campaigns side by side."""
    enabled = tuple(enabled)
    return tuple(  # type: ignore[return-value]
        run_campaign(model, cfg, enabled, policy, semantics, "same", horizon, workers)
        for semantics in (Semantics.ZERO_TIME, Semantics.TIME_AWARE)
    )


# --- rendering --------------------------------------------------------------

REPORT_HEADER = ("class", "mutants", "kills_deadline", "kills_access", "kills_output",
                 "kills_total", "inapplicable", "score")


def report_rows(report: CampaignReport) -> List[List[str]]:
    rows = []
    for summary in report.classes.values():
        if summary.not_applicable and summary.mutants == 0:
            rows.append([summary.op_class.value] + [NOT_APPLICABLE] * (len(REPORT_HEADER) - 1))
            continue
        rows.append([
            summary.op_class.value,
            str(summary.mutants),
            str(summary.kills[KillReason.DEADLINE_MISS]),
            str(summary.kills[KillReason.ACCESS_DIVERGENCE]),
            str(summary.kills[KillReason.OUTPUT_DIVERGENCE]),
            str(summary.kills_total),
            str(summary.inapplicable),
            _score_cell(summary.kills_total, summary.mutants),
        ])
    totals = [sum(s.kills[r] for s in report.classes.values()) for r in KillReason]
    rows.append(["Total", str(report.mutants)] + [str(k) for k in totals]
                + [str(report.kills), str(report.inapplicable), score_text(report)])
    return rows


def render_csv(report: CampaignReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    writer.writerows(report_rows(report))
    return buf.getvalue()


def render_table(report: CampaignReport) -> str:
    return format_table(REPORT_HEADER, report_rows(report))


def render_details(report: CampaignReport) -> str:
    """One line per mutant: id, status, reasons, first-failure tick."""
    lines = ["# mutant_id\tstatus\treasons\tfirst_failure"]
    for row in report.rows:
        first = "-" if row.verdict.first_failure is None else str(row.verdict.first_failure)
        lines.append("\t".join((row.mutant_id, row.verdict.status.value, row.verdict.reason_text(), first)))
    return "\n".join(lines) + "\n"


def render_dual_table(zero_time: CampaignReport, time_aware: CampaignReport) -> str:
    """Per-class mutants, kills and scores of both semantics side by side."""
    header = ("class", "zero-time mutants", "zero-time killed", "zero-time score",
              "time-aware mutants", "time-aware killed", "time-aware score")

    def cells(report: CampaignReport, op_class: OperatorClass) -> List[str]:
        summary = report.classes.get(op_class)
        if summary is None or (summary.not_applicable and summary.mutants == 0):
            return [NOT_APPLICABLE] * 3
        return [str(summary.mutants), str(summary.kills_total),
                _score_cell(summary.kills_total, summary.mutants)]

    rows = []
    for op_class in OperatorClass:
        if op_class in zero_time.classes or op_class in time_aware.classes:
            rows.append([op_class.value] + cells(zero_time, op_class) + cells(time_aware, op_class))
    rows.append(["Total", str(zero_time.mutants), str(zero_time.kills), score_text(zero_time),
                 str(time_aware.mutants), str(time_aware.kills), score_text(time_aware)])
    return format_table(header, rows)
