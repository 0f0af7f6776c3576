"""Command-line interface: ``mutsched simulate|mutate|analyze|gantt|report``."""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional, Sequence

from . import __version__
from .analysis import (
    REPORT_HEADER,
    mutation_score,
    render_csv,
    render_details,
    render_dual_table,
    render_table,
    run_campaign,
    score_text,
)
from .config import Config, get_config, parse_campaign, reset_config
from .engine import simulate, simulate_zero_time
from .exceptions import (
    ConfigurationError,
    EmptyOperatorSetError,
    MutschedError,
    StorageError,
    TraceError,
)
from .export import (
    format_access_log,
    format_event_log,
    format_gantt_csv,
    format_manifest,
    format_output_log,
    format_table,
    parse_event_log,
    read_csv_table,
    render_ascii_gantt,
    render_svg_gantt,
)
from .file_manager import ArtifactInfo, FileManager
from .model import Semantics, SystemModel, TraceDetail, parse_model, serialize_model
from .mutation import apply_mutant, survey_mutants

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_IO = 2
EXIT_DEADLINE_MISS = 3
EXIT_EMPTY_OPERATOR_SET = 4

MUTANT_INDEX = "index.json"

_handler: Optional[logging.Handler] = None


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as ConfigurationError so they map to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def _setup_logging(verbosity: int) -> None:
    global _handler
    root = logging.getLogger("mutsched")
    if _handler is not None:
        root.removeHandler(_handler)
        _handler = None
    if verbosity <= 0:
        return
    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter("[mutsched] %(levelname)s %(name)s: %(message)s"))
    root.addHandler(_handler)
    root.setLevel(logging.DEBUG if verbosity > 1 else logging.INFO)


def _delta_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("delta values must be positive integers")
    return values


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _load_model(fm: FileManager, path: str) -> SystemModel:
    return parse_model(fm.read_text(path))


def _campaign_config(fm: FileManager, args: argparse.Namespace) -> Config:
    """Settings from --config first, then from explicit flags."""
    config = get_config()
    if getattr(args, "config", None):
        config.configure(**parse_campaign(fm.read_text(args.config)))
    deltas = getattr(args, "delta", None)
    config.configure(
        operators=getattr(args, "ops", None),
        timing_deltas=deltas,
        priority_deltas=deltas,
        oracles=getattr(args, "oracles", None),
        baseline=getattr(args, "baseline", None),
        semantics=getattr(args, "semantics", None),
        horizon=getattr(args, "horizon", None),
        workers=getattr(args, "workers", None),
    )
    config.validate()
    return config


def _write(fm: FileManager, path: str, content: str) -> ArtifactInfo:
    info = fm.write_text(path, content)
    logger.info("wrote %s (%d bytes, sha256 %s)", info.path, info.size, info.checksum)
    return info


def _emit(fm: FileManager, path: Optional[str], content: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(content)
    else:
        _write(fm, path, content)


def cmd_simulate(args: argparse.Namespace, fm: FileManager) -> int:
    model = _load_model(fm, args.model)
    semantics = Semantics(args.semantics) if args.semantics else model.config.semantics
    run = simulate_zero_time if semantics is Semantics.ZERO_TIME else simulate
    trace = run(model, args.horizon, TraceDetail.ALL)

    outputs = [
        (args.events, format_event_log),
        (args.accesses, format_access_log),
        (args.outputs, format_output_log),
        (args.gantt_csv, lambda tr: format_gantt_csv(tr.gantt)),
        (args.gantt_svg, lambda tr: render_svg_gantt(tr.gantt, tr.horizon, args.model)),
    ]
    requested = [(path, render) for path, render in outputs if path]
    if not requested:
        sys.stdout.write(format_event_log(trace))
    for path, render in requested:
        _emit(fm, path, render(trace))

    misses = trace.deadline_misses()
    if misses:
        first = misses[0]
        print(f"[mutsched] deadline miss: {first.task_id} instance {first.instance} at t={first.time}"
              f" ({len(misses)} total)", file=sys.stderr)
        return EXIT_DEADLINE_MISS
    return EXIT_OK


def cmd_mutate(args: argparse.Namespace, fm: FileManager) -> int:
    model = _load_model(fm, args.model)
    config = _campaign_config(fm, args)
    survey = survey_mutants(model, config.delta_config(), config.operators)
    _emit(fm, args.manifest, format_manifest(survey.descriptors))
    if args.emit_models:
        paths = [os.path.join(args.out_dir, f"{d.mutant_id}.json") for d in survey.descriptors]
        infos = fm.write_many(
            (path, serialize_model(apply_mutant(model, d))) for path, d in zip(paths, survey.descriptors)
        )
        index = [dict(mutant=d.mutant_id, **infos[path].to_dict()) for path, d in zip(paths, survey.descriptors)]
        _write(fm, os.path.join(args.out_dir, MUTANT_INDEX), json.dumps(index, indent=2) + "\n")
    logger.info("%d mutants, %d inapplicable sites", len(survey), sum(survey.inapplicable.values()))
    return EXIT_OK


def _suffixed(path: str, semantics: Semantics) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}.{semantics.value}{ext}"


def cmd_analyze(args: argparse.Namespace, fm: FileManager) -> int:
    model = _load_model(fm, args.model)
    config = _campaign_config(fm, args)
    cfg = config.delta_config()
    reports = [
        run_campaign(model, cfg, config.operators, config.oracles, semantics,
                     config.baseline, config.horizon, config.workers)
        for semantics in config.semantics_list(model.config.semantics)
    ]
    dual = len(reports) > 1

    for report in reports:
        def target(path: Optional[str]) -> Optional[str]:
            return _suffixed(path, report.semantics) if path and dual else path

        if args.csv:
            _write(fm, target(args.csv), render_csv(report))
        if args.details:
            _write(fm, target(args.details), render_details(report))
        if args.table and not dual:
            _write(fm, args.table, render_table(report))

    table = render_dual_table(*reports) if dual else render_table(reports[0])
    if dual and args.table:
        _write(fm, args.table, table)
    elif not args.table:
        sys.stdout.write(table)

    for report in reports:
        suffix = f" semantics={report.semantics.value}" if dual else ""
        print(f"mutation_score={score_text(report)}{suffix}")
        if report.mutants:
            logger.info("score %s exactly", mutation_score(report))
    return EXIT_OK


def cmd_gantt(args: argparse.Namespace, fm: FileManager) -> int:
    trace = parse_event_log(fm.read_text(args.trace))
    if args.svg:
        _write(fm, args.svg, render_svg_gantt(trace.gantt, trace.horizon, args.trace))
    else:
        sys.stdout.write(render_ascii_gantt(trace.gantt, trace.horizon))
    return EXIT_OK


def cmd_report(args: argparse.Namespace, fm: FileManager) -> int:
    text = fm.read_text(args.report)
    header, rows = read_csv_table(text)
    if tuple(header) != REPORT_HEADER:
        raise TraceError(f"not a campaign report: header {','.join(header)}")
    sys.stdout.write(text if args.csv else format_table(header, rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="mutsched", description="Mutation testing of task-set scheduling models")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
    sub = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)
    sub.required = True

    def campaign_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="campaign document (JSON)")
        p.add_argument("--ops", help="operator keys or classes, comma-separated; 'all' or 'none'")
        p.add_argument("--delta", type=_delta_list, help="delta values for every class, comma-separated")

    p = sub.add_parser("simulate", help="simulate a model and write its trace")
    p.add_argument("model")
    p.add_argument("--semantics", choices=[s.value for s in Semantics])
    p.add_argument("--horizon", type=_positive)
    p.add_argument("--events", help="event log path")
    p.add_argument("--accesses", help="access log path")
    p.add_argument("--outputs", help="output log path")
    p.add_argument("--gantt-csv", dest="gantt_csv", help="gantt CSV path")
    p.add_argument("--gantt-svg", dest="gantt_svg", help="gantt SVG path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mutate", help="enumerate first-order mutants")
    p.add_argument("model")
    campaign_flags(p)
    p.add_argument("--manifest", help="manifest path (default: stdout)")
    p.add_argument("--emit-models", dest="emit_models", action="store_true", help="write every mutant model")
    p.add_argument("--out-dir", dest="out_dir", default="mutants", help="directory for --emit-models")
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("analyze", help="run a mutation campaign")
    p.add_argument("model")
    campaign_flags(p)
    p.add_argument("--semantics", choices=["time-aware", "zero-time", "both"])
    p.add_argument("--horizon", type=_positive)
    p.add_argument("--oracles", help="comma-separated subset of deadline,access,output")
    p.add_argument("--baseline", choices=["same", "zero-time", "time-aware"])
    p.add_argument("--workers", type=_positive)
    p.add_argument("--csv", help="report CSV path")
    p.add_argument("--table", help="rendered report table path (default: stdout)")
    p.add_argument("--details", help="per-mutant verdicts path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gantt", help="render an event log as a Gantt chart")
    p.add_argument("trace")
    p.add_argument("--svg", help="write an SVG chart instead of ASCII to stdout")
    p.set_defaults(func=cmd_gantt)

    p = sub.add_parser("report", help="render a campaign report CSV")
    p.add_argument("report")
    p.add_argument("--csv", action="store_true", help="pass the CSV through unchanged")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    Returns:
        0 on success, 1 on invalid input, 2 on I/O errors, 3 when a
        simulation missed a deadline and 4 when no mutation operator is
        enabled
    """
    fm = FileManager()
    reset_config()
    try:
        args = build_parser().parse_args(argv)
        _setup_logging(args.verbose)
        return args.func(args, fm)
    except EmptyOperatorSetError as e:
        print(f"[mutsched] error: {e}", file=sys.stderr)
        return EXIT_EMPTY_OPERATOR_SET
    except StorageError as e:
        print(f"[mutsched] error: {e}", file=sys.stderr)
        return EXIT_IO
    except MutschedError as e:
        print(f"[mutsched] error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
