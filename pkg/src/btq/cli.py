"""`btq` command-line tool: check mission files, generate XML, run scenarios.

Exit codes: 0 success (and, for `run`, every monitored requirement
satisfied); 1 diagnostics with error severity; 2 run completed with at least
one violated requirement (or the tick budget ran out); 3 I/O or internal
error. Diagnostics go to stderr as `file:line:col: [code] message`; generated
XML, traces, and reports go to files or stdout only.
"""

import argparse
import os
import sys
from pathlib import Path

from btq.codegen import generate
from btq.diagnostics import Diagnostic, DiagnosticError, Severity, has_errors
from btq.engine import Engine, load_scenario
from btq.monitor import build_report, render_report
from btq.parser import check_source

OK = 0
DIAGNOSTICS = 1
VIOLATIONS = 2
IO_ERROR = 3

_RED = "\x1b[31m"
_YELLOW = "\x1b[33m"
_RESET = "\x1b[0m"


def _use_color(mode: str) -> bool:
    if mode == "never" or os.environ.get("BTQ_NO_COLOR"):
        return False
    return sys.stderr.isatty()


def _print_diagnostics(diags: list[Diagnostic], color: bool) -> None:
    for diag in diags:
        line = diag.render()
        if color:
            tint = _RED if diag.severity is Severity.ERROR else _YELLOW
            line = line.replace(f"[{diag.code}]", f"{tint}[{diag.code}]{_RESET}", 1)
        print(line, file=sys.stderr)


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_check(args) -> int:
    color = _use_color(args.color)
    worst = OK
    for path in args.paths:
        try:
            text = _read_text(path)
        except OSError as exc:
            print(f"btq: cannot read {path}: {exc.strerror}", file=sys.stderr)
            worst = IO_ERROR
            continue
        _, diags = check_source(text, path)
        _print_diagnostics(diags, color)
        if has_errors(diags) and worst != IO_ERROR:
            worst = DIAGNOSTICS
    return worst


def cmd_gen(args) -> int:
    color = _use_color(args.color)
    try:
        text = _read_text(args.input)
    except OSError as exc:
        print(f"btq: cannot read {args.input}: {exc.strerror}", file=sys.stderr)
        return IO_ERROR
    model, diags = check_source(text, args.input)
    _print_diagnostics(diags, color)
    if model is None:
        return DIAGNOSTICS
    xml = generate(model)
    out = args.out or str(Path(args.input).with_suffix(".xml"))
    if out == "-":
        sys.stdout.write(xml)
        return OK
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(xml)
    except OSError as exc:
        print(f"btq: cannot write {out}: {exc.strerror}", file=sys.stderr)
        return IO_ERROR
    if not args.quiet:
        print(f"wrote {out}", file=sys.stderr)
    return OK


def cmd_run(args) -> int:
    color = _use_color(args.color)
    try:
        text = _read_text(args.input)
        scenario_text = _read_text(args.scenario)
    except OSError as exc:
        print(f"btq: cannot read {exc.filename}: {exc.strerror}", file=sys.stderr)
        return IO_ERROR
    model, diags = check_source(text, args.input)
    _print_diagnostics(diags, color)
    if model is None:
        return DIAGNOSTICS
    strict_override = None
    if args.strict:
        strict_override = True
    elif args.lenient:
        strict_override = False
    try:
        scenario = load_scenario(scenario_text, model, args.scenario, strict_override)
    except DiagnosticError as exc:
        _print_diagnostics(exc.diagnostics, color)
        return DIAGNOSTICS
    engine = Engine(model, scenario)
    try:
        trace = engine.run()
    except DiagnosticError as exc:
        _print_diagnostics(exc.diagnostics, color)
        return DIAGNOSTICS
    if args.trace:
        try:
            with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(trace.to_jsonl())
        except OSError as exc:
            print(f"btq: cannot write {args.trace}: {exc.strerror}", file=sys.stderr)
            return IO_ERROR
    report = build_report(engine.monitor.records, model)
    if args.report_format == "json" or not args.quiet:
        sys.stdout.write(render_report(report, args.report_format))
    if trace.max_ticks_exceeded:
        print(
            f"{args.scenario}:1:1: [E405] stopped after {trace.ticks} ticks "
            "without the root finishing",
            file=sys.stderr,
        )
        return VIOLATIONS
    if report.total_violations > 0:
        return VIOLATIONS
    return OK


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btq",
        description="Toolchain for quality-annotated behavior-tree missions",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress informational output")
    parser.add_argument(
        "--color", choices=["never", "auto"], default="auto", help="diagnostic coloring"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse and validate mission files")
    p_check.add_argument("paths", nargs="+", metavar="file.btq")
    p_check.set_defaults(func=cmd_check)

    p_gen = sub.add_parser("gen", help="generate BehaviorTree.CPP XML")
    p_gen.add_argument("input", metavar="file.btq")
    p_gen.add_argument("--out", help="output path, or '-' for stdout (default: <input stem>.xml)")
    p_gen.set_defaults(func=cmd_gen)

    p_run = sub.add_parser("run", help="execute a mission against a scripted scenario")
    p_run.add_argument("input", metavar="file.btq")
    p_run.add_argument("--scenario", required=True, metavar="file.scn.json")
    p_run.add_argument("--report-format", choices=["text", "json"], default="text")
    p_run.add_argument("--trace", metavar="file.jsonl", help="write the execution trace here")
    mode = p_run.add_mutually_exclusive_group()
    mode.add_argument("--strict", action="store_true", help="every leaf must have a behavior")
    mode.add_argument("--lenient", action="store_true", help="unscripted leaves succeed at once")
    p_run.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return args.func(args)
    except DiagnosticError as exc:
        _print_diagnostics(exc.diagnostics, _use_color(args.color))
        return DIAGNOSTICS
    except OSError as exc:
        print(f"btq: {exc}", file=sys.stderr)
        return IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
