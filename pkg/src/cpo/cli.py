"""Command-line entry point: ``cpo <command> ...``.

Machine-readable output only goes to files named on the command line; a
short human summary goes to standard output and diagnostics to standard
error. Set ``CPO_NO_COLOR`` to disable ANSI styling.
"""

from __future__ import annotations

import argparse
import enum
import json
import os
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .analytics import compare_units, group_by_label, regress_steps, to_decimal, type_stats
from .errors import (
    CPOError,
    DanglingReferenceError,
    InsufficientDataError,
    PipelineCycleError,
    SingleUnitError,
)
from .golden import all_fixtures
from .graph import KGraph, format_decimal, validate_wellformed
from .reasoner import (
    ConfidencePolicy,
    annotate,
    classify,
    marks_from_document,
    marks_to_document,
    vetting_from_document,
    vetting_to_document,
)
from .serialize import dump_json, dumps, from_triples, loads, to_triples
from .shapes import check_all
from .synthgen import GenSpec, generate
from .tagger import (
    MappingTable,
    attach_outcomes,
    load_event_log,
    outcomes_from_document,
    records_from_document,
    records_to_document,
    tag_events,
)
from .taxonomy import load_builtin_taxonomy


class ExitCode(enum.IntEnum):
    OK = 0
    USAGE = 1
    VIOLATIONS = 2
    REASONER = 3


EXIT_CODES = """exit codes:
  0  success; every check conforms
  1  usage or I/O error
  2  well-formedness or shape violations
  3  reasoner error (pipeline cycle, dangling reference)
"""


class _Fail(Exception):
    def __init__(self, code: ExitCode, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE, f"{self.prog}: error: {message}\n")


# -- output helpers -----------------------------------------------------------


def _styled(text: str, code: str) -> str:
    if os.environ.get("CPO_NO_COLOR") is not None or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _ok(text: str) -> str:
    return _styled(text, "32")


def _bad(text: str) -> str:
    return _styled(text, "31")


def _stamp(doc: dict[str, Any], args: argparse.Namespace) -> dict[str, Any]:
    if getattr(args, "stamp", False):
        doc = dict(doc)
        doc["generated_at"] = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
    return doc


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Fail(ExitCode.USAGE, f"cannot write {path}: {exc}") from None


def _read(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(ExitCode.USAGE, f"cannot read {path}: {exc}") from None


def _read_json(path: Path) -> Any:
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise _Fail(ExitCode.USAGE, f"{path}: invalid JSON: {exc}") from None


def _load_graph(path: Path) -> KGraph:
    text = _read(path)
    if path.suffix in (".nt", ".triples"):
        return from_triples(text)
    return loads(text)


def _load_inputs(args: argparse.Namespace):
    vetting = vetting_from_document(_read_json(args.vetting)) if args.vetting else []
    marks = marks_from_document(_read_json(args.marks)) if args.marks else []
    return vetting, marks


def _policy(args: argparse.Namespace) -> ConfidencePolicy:
    kw: dict[str, Any] = {}
    if getattr(args, "threshold", None) is not None:
        kw["positive_threshold"] = args.threshold
    if getattr(args, "unknown_blocks", False):
        kw["unknown_blocks_veridical"] = True
    try:
        return ConfidencePolicy(**kw)
    except ValueError as exc:
        raise _Fail(ExitCode.USAGE, f"bad policy: {exc}") from None


def _classify(graph, vetting, marks, policy):
    try:
        return classify(graph, vetting, marks, policy)
    except (PipelineCycleError, DanglingReferenceError) as exc:
        raise _Fail(ExitCode.REASONER, str(exc)) from None


# -- commands -----------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> ExitCode:
    graph = _load_graph(args.graph)
    problems = validate_wellformed(graph)
    report: dict[str, Any] = {"graph": str(args.graph), "wellformed": [v.to_dict() for v in problems], "shapes": []}
    if problems:
        for v in problems:
            print(f"{_bad('VIOLATION')} {v.rule}: {v.message}")
        code = ExitCode.VIOLATIONS
    else:
        vetting, marks = _load_inputs(args)
        result = _classify(graph, vetting, marks, _policy(args))
        reports = check_all(graph, result)
        report["shapes"] = [r.to_dict() for r in reports]
        for r in reports:
            if r.conforms:
                print(f"{_ok('conforms')} {r.shape.value} {r.focus}")
            else:
                print(f"{_bad('violates')} {r.shape.value} {r.focus}: missing {', '.join(r.missing)}")
        code = ExitCode.OK if all(r.conforms for r in reports) else ExitCode.VIOLATIONS
    if args.report:
        _write(args.report, dump_json(_stamp(report, args)))
    print(f"{args.graph}: {'ok' if code is ExitCode.OK else 'violations found'}")
    return code


def cmd_classify(args: argparse.Namespace) -> ExitCode:
    graph = _load_graph(args.graph)
    vetting, marks = _load_inputs(args)
    result = _classify(graph, vetting, marks, _policy(args))
    _write(args.output, dump_json(_stamp(result.to_dict(), args)))
    if args.annotate_out:
        _write(args.annotate_out, dumps(annotate(graph, result)))
    for name, members in result.sets().items():
        print(f"{name} = [{', '.join(members)}]")
    return ExitCode.OK


def _beside(path: Path, suffix: str) -> Path:
    stem = path.name[: -len(path.suffix)] if path.suffix else path.name
    return path.with_name(f"{stem}.{suffix}.json")


def cmd_tag(args: argparse.Namespace) -> ExitCode:
    events = load_event_log(_read(args.log))
    table = MappingTable.from_document(_read_json(args.map))
    result = tag_events(events, table)
    out: Path = args.output
    _write(out, dumps(result.graph))
    _write(args.records_out or _beside(out, "records"), dump_json(records_to_document(result.records)))
    _write(args.vetting_out or _beside(out, "vetting"), dump_json(vetting_to_document(result.vetting)))
    if args.skipped_out:
        doc = {"format_version": "1", "skipped": [s.to_dict() for s in result.skipped]}
        _write(args.skipped_out, dump_json(doc))
    print(f"tagged {len(events) - len(result.skipped)} of {len(events)} events into {len(result.records)} workflow records")
    for s in result.skipped:
        print(f"  skipped {s.event.source_id}: {s.reason}")
    return ExitCode.OK


def _tsv(stats) -> str:
    lines = ["signature\tn\tmean_outcome\tvariance"]
    for s in stats:
        d = s.to_dict()
        lines.append(f"{' > '.join(s.signature)}\t{s.n}\t{d['mean_outcome']}\t{d['variance']}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args: argparse.Namespace) -> ExitCode:
    records = records_from_document(_read_json(args.records))
    if args.outcomes:
        records = attach_outcomes(records, outcomes_from_document(_read_json(args.outcomes)), force=True)
    stats = type_stats(records)
    report: dict[str, Any] = {"format_version": "1", "type_stats": [s.to_dict() for s in stats]}
    notes: list[str] = []
    regression = None
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            regression = regress_steps(records)
        notes.extend(str(w.message) for w in caught)
        report["regression"] = regression.to_dict()
    except InsufficientDataError as exc:
        report["regression"] = None
        notes.append(f"regression skipped: {exc}")
    comparison = None
    if args.by_unit:
        try:
            comparison = compare_units(group_by_label(records, args.by_unit))
            report["unit_comparison"] = comparison.to_dict()
        except SingleUnitError as exc:
            report["unit_comparison"] = None
            notes.append(f"unit comparison skipped: {exc}")
    report["notes"] = notes

    out: Path = args.report
    stem = out.with_suffix("")
    _write(out, dump_json(_stamp(report, args)))
    _write(stem.with_name(stem.name + "_types.tsv"), _tsv(stats))
    if not args.no_figures:
        from . import plotting

        out.parent.mkdir(parents=True, exist_ok=True)
        plotting.plot_type_stats(stats, stem.with_name(stem.name + "_types.png"))
        if regression is not None:
            plotting.plot_regression(regression, stem.with_name(stem.name + "_regression.png"))
        if comparison is not None:
            plotting.plot_unit_deltas(comparison, stem.with_name(stem.name + "_units.png"))

    print(f"{len(records)} records, {len(stats)} workflow types")
    for s in stats[:5]:
        print(f"  {s.mean_outcome!s:>10}  n={s.n:<4} {' > '.join(s.signature)}")
    if regression is not None:
        print(f"regression r_squared = {format_decimal(to_decimal(regression.r_squared))}")
    for n in notes:
        print(f"note: {n}")
    return ExitCode.OK


def cmd_gen(args: argparse.Namespace) -> ExitCode:
    fields: dict[str, Any] = dict(_read_json(args.spec)) if args.spec else {}
    for key, value in (("seed", args.seed), ("n_loops", args.loops), ("iterations_per_loop", args.iters)):
        if value is not None:
            fields[key] = value
    spec = GenSpec.from_dict(fields)
    data = generate(spec)
    for name, text in data.files().items():
        _write(args.out_dir / name, text)
    _write(args.out_dir / "spec.json", dump_json({"format_version": "1", **spec.to_dict()}))
    print(f"generated {len(data.events)} events in {spec.n_loops} loops, {len(data.marks)} not-veridical marks")
    return ExitCode.OK


def cmd_export(args: argparse.Namespace) -> ExitCode:
    if args.format == "taxonomy":
        text = load_builtin_taxonomy().export_text()
    else:
        if args.graph is None:
            raise _Fail(ExitCode.USAGE, f"--format {args.format} needs a graph argument")
        graph = _load_graph(args.graph)
        text = dumps(graph) if args.format == "canonical" else to_triples(graph)
    _write(args.output, text)
    print(f"wrote {args.format} export to {args.output}")
    return ExitCode.OK


def cmd_fixtures(args: argparse.Namespace) -> ExitCode:
    for fx in all_fixtures():
        _write(args.out_dir / f"{fx.name}.graph.json", dumps(fx.graph))
        _write(args.out_dir / f"{fx.name}.vetting.json", dump_json(vetting_to_document(fx.vetting)))
        _write(args.out_dir / f"{fx.name}.marks.json", dump_json(marks_to_document(fx.marks)))
        print(fx.name)
    return ExitCode.OK


# -- parser -------------------------------------------------------------------


def _sub(subs, name: str, fn: Callable, help_text: str) -> argparse.ArgumentParser:
    p = subs.add_parser(
        name, help=help_text, description=help_text, epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.set_defaults(func=fn)
    return p


def _reasoner_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--vetting", type=Path, required=required, help="vetting records file")
    p.add_argument("--marks", type=Path, required=required, help="veridicality marks file")
    p.add_argument("--threshold", help="confidence must exceed this decimal (default 0.5)")
    p.add_argument("--unknown-blocks", action="store_true", help="treat unmarked inputs as not veridical")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cpo",
        description="Cognitive process ontology toolkit.",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = _sub(subs, "validate", cmd_validate, "check well-formedness and every shape")
    p.add_argument("graph", type=Path)
    _reasoner_flags(p, required=False)
    p.add_argument("--report", type=Path, help="write the JSON validation report here")
    p.add_argument("--stamp", action="store_true", help="add a generation timestamp to file output")

    p = _sub(subs, "classify", cmd_classify, "derive RTB, PPCF, RTW and mere-guess sets")
    p.add_argument("graph", type=Path)
    _reasoner_flags(p, required=True)
    p.add_argument("-o", "--output", type=Path, required=True, help="classification result (JSON)")
    p.add_argument("--annotate-out", type=Path, help="also write the annotated graph here")
    p.add_argument("--stamp", action="store_true", help="add a generation timestamp to file output")

    p = _sub(subs, "tag", cmd_tag, "turn an event log into a graph and workflow records")
    p.add_argument("--log", type=Path, required=True, help="event log (JSON lines)")
    p.add_argument("--map", type=Path, required=True, help="activity mapping table (JSON)")
    p.add_argument("-o", "--out", dest="output", type=Path, required=True, help="tagged graph (JSON)")
    p.add_argument("--records-out", type=Path, help="workflow records (default: <out>.records.json)")
    p.add_argument("--vetting-out", type=Path, help="instantiated vetting records (default: <out>.vetting.json)")
    p.add_argument("--skipped-out", type=Path, help="skipped events with reasons")

    p = _sub(subs, "analyze", cmd_analyze, "outcome statistics, step regression and unit comparison")
    p.add_argument("--records", type=Path, required=True, help="workflow records (JSON)")
    p.add_argument("--outcomes", type=Path, help="outcome scores to attach (JSON)")
    p.add_argument("--by-unit", metavar="FIELD", help="compare groups by this record label, e.g. unit")
    p.add_argument("--report", type=Path, required=True, help="JSON report; TSV and PNG files are written beside it")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    p.add_argument("--stamp", action="store_true", help="add a generation timestamp to file output")

    p = _sub(subs, "gen", cmd_gen, "generate a synthetic event log with planted effects")
    p.add_argument("--seed", type=int)
    p.add_argument("--loops", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--spec", type=Path, help="GenSpec JSON; flags override its fields")
    p.add_argument("--out-dir", type=Path, required=True)

    p = _sub(subs, "export", cmd_export, "write a graph or the taxonomy in an interchange format")
    p.add_argument("graph", type=Path, nargs="?")
    p.add_argument("--format", choices=("canonical", "triples", "taxonomy"), default="canonical")
    p.add_argument("-o", "--output", type=Path, required=True)

    p = _sub(subs, "fixtures", cmd_fixtures, "write the reference graphs with their vetting and marks")
    p.add_argument("--out-dir", type=Path, required=True)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except _Fail as exc:
        print(f"cpo: {exc}", file=sys.stderr)
        return int(exc.code)
    except (PipelineCycleError, DanglingReferenceError) as exc:
        print(f"cpo: {exc}", file=sys.stderr)
        return int(ExitCode.REASONER)
    except CPOError as exc:
        print(f"cpo: {exc}", file=sys.stderr)
        return int(ExitCode.USAGE)


def main() -> None:
    sys.exit(run())
