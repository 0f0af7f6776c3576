"""Text and SVG renderings of traces, Gantt charts and mutant manifests."""

from __future__ import annotations

import csv
import io
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .engine import EventKind, Segment, Trace, TraceEvent, segments_from_events
from .exceptions import TraceError
from .model import Semantics, Tick

logger = logging.getLogger(__name__)

FIELD_SEP = "\t"
NONE_FIELD = "-"


# --- event / access / output logs -------------------------------------------

def format_event_log(trace: Trace) -> str:
    """
    Render the event log: a header comment, then one tab-separated line per
    event (time, kind, task, runnable or "-", instance).
    """
    lines = [f"# horizon={trace.horizon} semantics={trace.semantics.value}"]
    for ev in trace.events:
        lines.append(FIELD_SEP.join((
            str(ev.time), ev.kind.value, ev.task_id, ev.runnable_id or NONE_FIELD, str(ev.instance),
        )))
    return "\n".join(lines) + "\n"


def format_access_log(trace: Trace) -> str:
    lines = ["# time\ttask\trunnable\tstore\tkind\tvalue"]
    for a in trace.accesses:
        lines.append(FIELD_SEP.join(
            (str(a.time), a.task_id, a.runnable_id, a.store_id, a.kind, str(a.value))
        ))
    return "\n".join(lines) + "\n"


def format_output_log(trace: Trace) -> str:
    lines = ["# time\ttask\trunnable\tvalue"]
    for o in trace.outputs:
        lines.append(FIELD_SEP.join((str(o.time), o.task_id, o.runnable_id, str(o.value))))
    return "\n".join(lines) + "\n"


def _header_fields(line: str) -> Dict[str, str]:
    fields = {}
    for item in line.lstrip("#").split():
        key, sep, value = item.partition("=")
        if sep:
            fields[key] = value
    return fields


def parse_event_log(text: str) -> Trace:
    """
    Read an event log written by format_event_log.

    Only the event list, horizon and semantics are restored; the Gantt
    segments are rebuilt from the events.

    Raises:
        TraceError: On a malformed line or inconsistent event sequence
    """
    kinds = {k.value: k for k in EventKind}
    horizon: Optional[Tick] = None
    semantics = Semantics.TIME_AWARE
    events: List[TraceEvent] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            header = _header_fields(line)
            try:
                if header.get("horizon", "None") != "None":
                    horizon = int(header["horizon"])
                if "semantics" in header:
                    semantics = Semantics(header["semantics"])
            except ValueError as e:
                raise TraceError(f"line {lineno}: bad header: {e}")
            continue
        parts = line.split(FIELD_SEP)
        if len(parts) != 5:
            raise TraceError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        time, kind, task, runnable, instance = parts
        if kind not in kinds:
            raise TraceError(f"line {lineno}: unknown event kind {kind!r}")
        try:
            events.append(TraceEvent(
                int(time), kinds[kind], task, int(instance),
                None if runnable == NONE_FIELD else runnable,
            ))
        except ValueError:
            raise TraceError(f"line {lineno}: time and instance must be integers")

    tasks: List[str] = []
    for ev in events:
        if ev.task_id not in tasks:
            tasks.append(ev.task_id)
    trace = Trace(events=events, horizon=horizon, semantics=semantics, tasks=tuple(tasks))
    trace.gantt = segments_from_events(events, horizon, tasks)
    return trace


# --- Gantt ------------------------------------------------------------------

def format_gantt_csv(gantt: Dict[str, List[Segment]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["task", "start", "end", "runnable"])
    rows = sorted(
        ((seg.start, task, seg.end, seg.runnable_id) for task, segs in gantt.items() for seg in segs),
    )
    for start, task, end, runnable in rows:
        writer.writerow([task, start, end, runnable])
    return buf.getvalue()


def execution_order(gantt: Dict[str, List[Segment]]) -> List[str]:
    """Tasks in the order they occupy the processor, merging adjacent segments."""
    order: List[str] = []
    for _, task in sorted((seg.start, task) for task, segs in gantt.items() for seg in segs):
        if not order or order[-1] != task:
            order.append(task)
    return order


def render_ascii_gantt(gantt: Dict[str, List[Segment]], end: Optional[Tick] = None) -> str:
    """
    One row per task, one column per tick: '#' while running, '.' otherwise.

    The header carries a tick ruler (tick modulo 10).
    """
    if end is None:
        end = max((seg.end for segs in gantt.values() for seg in segs), default=0)
    width = max([len("task")] + [len(task) for task in gantt])
    lines = [f"{'task':<{width}} |" + "".join(str(t % 10) for t in range(end))]
    for task, segs in gantt.items():
        cells = ["."] * end
        for seg in segs:
            for t in range(seg.start, min(seg.end, end)):
                cells[t] = "#"
        lines.append(f"{task:<{width}} |" + "".join(cells))
    return "\n".join(lines) + "\n"


def render_svg_gantt(gantt: Dict[str, List[Segment]], end: Optional[Tick] = None,
                     title: str = "") -> str:
    """
    Render the Gantt chart as SVG with matplotlib.

    Output is deterministic: the SVG id salt is fixed and no date metadata
    is written.
    """
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib.figure import Figure

    tasks = list(gantt)
    if end is None:
        end = max((seg.end for segs in gantt.values() for seg in segs), default=1)
    runnables = sorted({seg.runnable_id for segs in gantt.values() for seg in segs})

    with matplotlib.rc_context({"svg.hashsalt": "mutsched", "svg.fonttype": "none"}):
        fig = Figure(figsize=(max(6.0, end * 0.25), 1.0 + 0.6 * max(len(tasks), 1)))
        ax = fig.subplots()
        colors = matplotlib.rcParams["axes.prop_cycle"].by_key()["color"]
        color_of = {rid: colors[i % len(colors)] for i, rid in enumerate(runnables)}
        for row, task in enumerate(reversed(tasks)):
            for seg in gantt[task]:
                ax.broken_barh([(seg.start, seg.end - seg.start)], (row + 0.1, 0.8),
                               facecolors=color_of[seg.runnable_id], edgecolor="black", linewidth=0.5)
                ax.text(seg.start + (seg.end - seg.start) / 2, row + 0.5, seg.runnable_id,
                        ha="center", va="center", fontsize=7)
        ax.set_yticks([row + 0.5 for row in range(len(tasks))])
        ax.set_yticklabels(list(reversed(tasks)))
        ax.set_xlim(0, end)
        ax.set_ylim(0, max(len(tasks), 1))
        ax.set_xlabel("time (ticks)")
        ax.grid(axis="x", linestyle=":", linewidth=0.5)
        if title:
            ax.set_title(title)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


# --- manifests and tables ---------------------------------------------------

def format_manifest(descriptors: Iterable) -> str:
    """Tab-separated (mutant_id, operator, target, delta or replacement) lines."""
    lines = ["# mutant_id\toperator\ttarget\targument"]
    for d in descriptors:
        lines.append(FIELD_SEP.join((d.mutant_id, d.operator.key, d.target.path, d.argument)))
    return "\n".join(lines) + "\n"


def manifest_rows(text: str) -> List[Tuple[str, ...]]:
    return [tuple(line.split(FIELD_SEP)) for line in text.splitlines()
            if line.strip() and not line.startswith("#")]


def format_table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    """Align columns; the first column is left-aligned, the rest right-aligned."""
    rows = [list(map(str, r)) for r in rows]
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]

    def line(cells: Sequence[str]) -> str:
        out = [cells[0].ljust(widths[0])]
        out += [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join(out).rstrip()

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(list(header)), rule] + [line(r) for r in rows]) + "\n"


def read_csv_table(text: str) -> Tuple[List[str], List[List[str]]]:
    """
    Split CSV text into its header and rows.

    Raises:
        TraceError: If the text has no header or rows of unequal width
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise TraceError("empty CSV input")
    header, body = rows[0], rows[1:]
    for i, row in enumerate(body, 2):
        if len(row) != len(header):
            raise TraceError(f"line {i}: expected {len(header)} fields, got {len(row)}")
    return header, body
