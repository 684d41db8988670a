"""Command line interface: ``sessmon <command> ...``."""

from __future__ import annotations

import argparse
import sys
from importlib.resources import files
from pathlib import Path
from typing import Optional, Sequence

from ..monitor import compute_reachability, dump, export_dot, generate_monitor
from ..projection import ProjectionError, format_local, project
from ..protocol import ProtocolError, errors, format_module, parse_module, validate
from .bench import VARIANTS, bench_pingpong, format_table
from .scenario import ScenarioError, load_scenario, run_scenario


def _resolve(path: str, subdir: str = "") -> Path:
    """A file path, or the name of a file shipped in the corpus."""
    p = Path(path)
    if p.exists():
        return p
    shipped = files("sessmon.corpus")
    if subdir:
        shipped = shipped.joinpath(subdir)
    candidate = Path(str(shipped.joinpath(p.name)))
    if candidate.exists():
        return candidate
    raise FileNotFoundError(path)


def _load(path: str):
    text = _resolve(path).read_text(encoding="utf-8")
    module = parse_module(text)
    return module, validate(module)


def _print_diagnostics(path: str, diags) -> None:
    for d in diags:
        print(f"{path}:{d}", file=sys.stderr)


def cmd_parse(args) -> int:
    module, _ = _load(args.file)
    print(format_module(module), end="")
    return 0


def cmd_validate(args) -> int:
    module, diags = _load(args.file)
    _print_diagnostics(args.file, diags)
    if errors(diags):
        return 1
    names = ", ".join(p.name for p in module)
    print(f"{args.file}: ok ({names})")
    return 0


def _projection(args):
    module, diags = _load(args.file)
    if errors(diags):
        _print_diagnostics(args.file, diags)
        return None
    if args.protocol not in module:
        print(f"error: no protocol {args.protocol!r}", file=sys.stderr)
        return None
    try:
        return project(module[args.protocol], args.role, module)
    except ProjectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_project(args) -> int:
    local = _projection(args)
    if local is None:
        return 1
    print(format_local(local))
    return 0


def cmd_monitor(args) -> int:
    local = _projection(args)
    if local is None:
        return 1
    fsm = generate_monitor(local)
    print(dump(fsm), end="")
    if args.reach:
        for state, roles in sorted(compute_reachability(fsm).as_dict().items()):
            print(f"reach {state}: [{', '.join(roles)}]")
    if args.dot:
        Path(args.dot).write_text(export_dot(fsm, f"{args.protocol}_{args.role}"),
                                  encoding="utf-8")
    return 0


def cmd_simulate(args) -> int:
    scenario = load_scenario(_resolve(args.scenario, "scenarios"))
    result = run_scenario(scenario, seed=args.seed)
    if args.trace:
        result.runtime.trace.write(args.trace)
    else:
        print(result.trace_text, end="")
    for failure in result.failures:
        print(f"{scenario.name}: {failure}", file=sys.stderr)
    status = "ok" if result.ok else "FAILED"
    print(f"{scenario.name} seed={result.seed} records={len(result.runtime.trace)} {status}",
          file=sys.stderr)
    return 0 if result.ok else 1


def cmd_bench(args) -> int:
    variants = VARIANTS if args.variant == "all" else (args.variant,)
    reports = [bench_pingpong(v, args.iters, args.scheduler, args.seed) for v in variants]
    print(format_table(reports))
    for r in reports:
        print(r.record())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sessmon", description="Session protocols, monitors and monitored actor runs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a protocol file and print it back")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("validate", help="check a protocol file for well-formedness")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    for name, func, text in (("project", cmd_project, "print the local type of a role"),
                             ("monitor", cmd_monitor, "print the monitor of a role")):
        p = sub.add_parser(name, help=text)
        p.add_argument("file")
        p.add_argument("--protocol", required=True)
        p.add_argument("--role", required=True)
        if name == "monitor":
            p.add_argument("--dot", metavar="OUT", help="also write Graphviz DOT to OUT")
            p.add_argument("--reach", action="store_true", help="print the reachability table")
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="run a scenario under the deterministic scheduler")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--trace", metavar="OUT", help="write the trace log to OUT")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run the PingPong overhead benchmark")
    p.add_argument("workload", choices=["pingpong"])
    p.add_argument("--variant", choices=[*VARIANTS, "all"], default="all")
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--scheduler", choices=["live", "sim"], default="live")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc}", file=sys.stderr)
        return 2
    except ProtocolError as exc:
        _print_diagnostics(getattr(args, "file", ""), exc.diagnostics)
        return 1
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
