"""Command-line front door.

Exit codes: 0 success (member / sound), 1 violation found (artifacts
written where applicable), 2 usage or I/O errors with line-numbered
diagnostics.  All output is plain text and stable for fixed inputs and
seeds; the default seed comes from ``LINVIEW_SEED`` when a command does
not receive one.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from pathlib import Path

from .enforce import (AtomicInner, StarSystem, certificate, enforced_process,
                      scripted_inner_from_text)
from .history import History, res
from .membership import is_linearizable
from .scenarios import SCENARIOS, fuzz_campaign, new_item_bug_inner, run_scenario
from .seqspec import catalog, get_spec
from .sim import MalformedSchedule, Schedule, parse_schedule, run
from .trace import (TraceParseError, format_history, format_tuples,
                    format_value, parse_history, parse_tuples)
from .verifier import collect_report, run_monitor_mode, run_verification
from .views import MalformedLog, build_history, lambda_of, validate_views
from . import gen


class UsageError(Exception):
    pass


def _default_seed() -> int:
    try:
        return int(os.environ.get("LINVIEW_SEED", "0"))
    except ValueError:
        return 0


def _resolve_inner(kind: str, spec):
    if kind == "correct":
        return AtomicInner(spec)
    if kind == "phantom":
        return new_item_bug_inner()
    if kind.startswith("scripted:"):
        path = Path(kind.split(":", 1)[1])
        return scripted_inner_from_text(path.read_text(), name=path.stem)
    raise UsageError(f"unknown inner {kind!r}; use correct, phantom, "
                     "or scripted:<file>")


def _resolve_schedule(value: str) -> Schedule:
    try:
        return Schedule.random(seed=int(value))
    except ValueError:
        pass
    return parse_schedule(Path(value).read_text())


def _usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _print_linearization(hist, lin) -> None:
    for op, result in lin.order:
        print(f"{op.pretty()} -> {format_value(result)}")
    for uid in sorted(lin.dropped):
        print(f"# dropped pending {hist.op(uid).pretty()}")


def cmd_check(args) -> int:
    spec = get_spec(args.spec)
    hist = parse_history(Path(args.trace).read_text())
    lin = is_linearizable(hist, spec)
    if lin is None:
        print("NOT LINEARIZABLE")
        return 1
    _print_linearization(hist, lin)
    return 0


def cmd_xlambda(args) -> int:
    tuples, _pending = parse_tuples(Path(args.tuples).read_text())
    violation = validate_views(tuples)
    if violation is not None:
        print(violation.describe(), file=sys.stderr)
        return 1
    hist = build_history(tuples)
    print(format_history(hist), end="")
    return 0


def _write(outdir: Path, name: str, text: str) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    path.write_text(text)
    return path


def _dump_run(outdir: Path, rep) -> int:
    """Write the shared artifacts of a wrapped run; returns the number
    of error verdicts."""
    rec = rep.recorded
    _write(outdir, "star.trace", format_history(rec.star_history()))
    _write(outdir, "inner.trace", format_history(rec.inner_history()))
    lines = []
    errors = 0
    for i, v in enumerate(rep.verdicts):
        word = "error" if v.error else "ok"
        lines.append(f"{i} p{v.process} {v.uid or '-'} {word}")
        if v.error:
            _write(outdir, f"witness-{i}.trace", format_history(v.witness))
            _write(outdir, f"witness-{i}.tuples", format_tuples(v.tuples))
            errors += 1
    _write(outdir, "verdicts.txt", "\n".join(lines) + "\n" if lines else "")
    return errors


def _flatten_errors(hist: History) -> History:
    """Outer responses of failed operations carry the witness history;
    in the trace artifact the marker word is enough (the witness gets
    its own file)."""
    events = tuple(
        res(e.op, "error") if e.kind == "res" and isinstance(e.result, tuple)
        and e.result[:1] == ("error",) else e
        for e in hist.events)
    return History(events)


def cmd_enforce(args) -> int:
    spec = get_spec(args.spec)
    sys_ = StarSystem(spec=spec, inner=_resolve_inner(args.inner, spec),
                      procs=args.procs, engine=args.engine,
                      bounded=args.bounded, halt_on_error=args.halt_on_error)
    rng = random.Random(args.seed)
    scripts = {p: gen.op_script(args.spec, p, args.ops, rng)
               for p in range(1, args.procs + 1)}
    schedule = _resolve_schedule(args.schedule)
    programs = {p: enforced_process(sys_, p, ops)
                for p, ops in scripts.items()}
    rec = run(programs, schedule, sys_.memory, max_steps=args.steps,
              meta=sys_.meta())
    rep = collect_report(rec)
    outdir = Path(args.out)
    errors = _dump_run(outdir, rep)
    _write(outdir, "outer.trace",
           format_history(_flatten_errors(rec.outer_history())))
    print(rep.summary())
    print(f"artifacts in {outdir}/")
    return 1 if errors else 0


def cmd_verify(args) -> int:
    spec = get_spec(args.spec)
    sys_ = StarSystem(spec=spec, inner=_resolve_inner(args.inner, spec),
                      procs=args.clients, engine=args.engine,
                      bounded=args.bounded)
    rng = random.Random(args.seed)
    scripts = {p: gen.op_script(args.spec, p, args.ops, rng)
               for p in range(1, args.clients + 1)}
    schedule = Schedule.random(seed=args.seed)
    if args.mode == "coupled":
        rep = run_verification(sys_, scripts, schedule, max_steps=args.steps)
    else:
        verifiers = range(args.clients + 1, args.clients + 1 + args.verifiers)
        rep = run_monitor_mode(sys_, scripts, verifiers, schedule,
                               max_steps=args.steps)
    errors = _dump_run(Path(args.out), rep)
    print(rep.summary())
    return 1 if errors else 0


def cmd_scenario(args) -> int:
    if args.action == "list":
        for name in sorted(SCENARIOS):
            print(name)
        return 0
    try:
        report = run_scenario(args.name)
    except KeyError as exc:
        return _usage(str(exc.args[0]))
    except AssertionError as exc:
        print(f"scenario FAILED: {exc}", file=sys.stderr)
        return 1
    print(report.render())
    return 0 if report.passed else 1


def cmd_fuzz(args) -> int:
    stats = fuzz_campaign(spec_name=args.spec, inner=args.inner,
                          runs=args.runs, seed=args.seed, procs=args.procs,
                          ops_per_proc=args.ops, engine=args.engine)
    for key in ("runs", "verdicts", "errors", "error_runs",
                "view_violations"):
        print(f"{key}: {stats[key]}")
    if "detection_rate" in stats:
        print(f"detection_rate: {stats['detection_rate']:.3f}")
    return 1 if stats["view_violations"] else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linview",
        description="check, enforce, and verify linearizability at runtime")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = sorted(catalog())

    p = sub.add_parser("check", help="test one trace for membership")
    p.add_argument("--spec", required=True, choices=specs)
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("xlambda",
                       help="rebuild the trace encoded by a view-tuple file")
    p.add_argument("--tuples", required=True)
    p.set_defaults(func=cmd_xlambda)

    def run_flags(p, clients_flag=False):
        p.add_argument("--spec", required=True, choices=specs)
        p.add_argument("--inner", default="correct",
                       help="correct | phantom | scripted:<file>")
        p.add_argument("--seed", type=int, default=_default_seed())
        p.add_argument("--steps", type=int, default=20_000)
        p.add_argument("--ops", type=int, default=4,
                       help="operations per client process")
        p.add_argument("--engine", choices=("atomic", "collect"),
                       default="atomic")
        p.add_argument("--bounded", action="store_true",
                       help="linked-list announce cells instead of sets")
        p.add_argument("--out", default="linview-out")

    p = sub.add_parser("enforce",
                       help="run the self-checking wrapped object")
    run_flags(p)
    p.add_argument("--procs", type=int, default=3)
    p.add_argument("--schedule", default=None,
                   help="schedule file or integer seed (default: --seed)")
    p.add_argument("--halt-on-error", action="store_true")
    p.set_defaults(func=cmd_enforce)

    p = sub.add_parser("verify", help="run online verification")
    run_flags(p)
    p.add_argument("--mode", choices=("coupled", "monitor"),
                   default="coupled")
    p.add_argument("--clients", type=int, default=3)
    p.add_argument("--verifiers", type=int, default=1,
                   help="extra checking processes (monitor mode)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scenario", help="replay a canned scenario")
    p.add_argument("action", choices=("run", "list"))
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("fuzz", help="randomized verification campaign")
    p.add_argument("--spec", default="queue", choices=specs)
    p.add_argument("--inner", default="correct")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--procs", type=int, default=3)
    p.add_argument("--ops", type=int, default=3)
    p.add_argument("--engine", choices=("atomic", "collect"),
                   default="atomic")
    p.set_defaults(func=cmd_fuzz)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "scenario" and args.action == "run" and not args.name:
        return _usage("scenario run needs a name")
    if args.command == "enforce" and args.schedule is None:
        args.schedule = str(args.seed)
    try:
        return args.func(args)
    except (TraceParseError, MalformedSchedule, UsageError) as exc:
        return _usage(str(exc))
    except MalformedLog as exc:
        return _usage(f"log cannot be decoded: {exc}")
    except FileNotFoundError as exc:
        return _usage(f"no such file: {exc.filename}")
    except KeyError as exc:
        return _usage(str(exc.args[0]) if exc.args else "bad key")


if __name__ == "__main__":
    sys.exit(main())
