"""Online verification runners.

Coupled mode: every process loops picking fresh operations, runs each
through the announcing wrapper, publishes the resulting view tuple, and
immediately snapshots all published tuples to test the rebuilt history.
A failed test yields an error verdict carrying the rebuilt history as a
witness.

Monitor mode decouples the roles: client processes only apply and
publish (constant extra cost per operation); verifier processes loop
snapshotting and testing without ever touching the object.  Clients stay
wait-free even if every verifier crashes.

Guarantees inherited from the construction, all exercised by the test
suite: every witness is a history the wrapped object really produced and
it fails membership (strong soundness); once the wrapped history goes
bad, verdicts eventually and then always report the error (completeness
and stability); per iteration the verification work is a constant number
of array operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .enforce import (StarSystem, Verdict, publish_tuple, snap_and_check,
                      star_apply)
from .history import Op
from .sim import ProcCtx, Program, RecordedExecution, Schedule, run
from .views import ViewTuple


def verifier_iteration(sys_: StarSystem, p: int, op: Op) -> Program:
    """One coupled-mode iteration; returns the verdict."""
    pctx = sys_.ctxs[p]
    y, view, lp = yield from star_apply(sys_, pctx, op)
    yield from publish_tuple(sys_, pctx, op, ViewTuple(op, y, view))
    verdict = yield from snap_and_check(sys_, pctx, op.uid)
    return verdict


def verifier_process(sys_: StarSystem, p: int, ops: Iterable[Op]) -> Program:
    for op in ops:
        yield from verifier_iteration(sys_, p, op)


def client_process(sys_: StarSystem, p: int, ops: Iterable[Op]) -> Program:
    """Monitor-mode client: apply and publish, never check."""
    pctx = sys_.ctxs[p]
    for op in ops:
        y, view, lp = yield from star_apply(sys_, pctx, op)
        yield from publish_tuple(sys_, pctx, op, ViewTuple(op, y, view))


def monitor_process(sys_: StarSystem, p: int) -> Program:
    """Monitor-mode verifier: check forever (the budget ends the loop)."""
    pctx = sys_.ctxs[p]
    while True:
        yield from snap_and_check(sys_, pctx, None)


@dataclass
class VerificationReport:
    recorded: RecordedExecution
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def errors(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.error]

    @property
    def first_error_step(self) -> int | None:
        for e in self.recorded.entries:
            if e.kind == "verdict" and e.value.error:
                return e.index
        return None

    def summary(self) -> str:
        step = self.first_error_step
        return "RESULT: SOUND" if step is None else f"RESULT: VIOLATION {step}"


def collect_report(recorded: RecordedExecution) -> VerificationReport:
    """Wrap any recorded run that logged verdict entries."""
    report = VerificationReport(recorded)
    report.verdicts = [e.value for e in recorded.verdicts()]
    return report


def run_verification(sys_: StarSystem, op_scripts: dict[int, Iterable[Op]],
                     schedule: Schedule, max_steps: int = 10_000,
                     log=None) -> VerificationReport:
    """Coupled mode: every process verifies its own operations."""
    programs = {p: verifier_process(sys_, p, ops)
                for p, ops in op_scripts.items()}
    recorded = run(programs, schedule, sys_.memory, max_steps,
                   meta={**sys_.meta(), "mode": "coupled"}, log=log)
    return collect_report(recorded)


def run_monitor_mode(sys_: StarSystem, op_scripts: dict[int, Iterable[Op]],
                     verifiers: Iterable[int], schedule: Schedule,
                     max_steps: int = 10_000) -> VerificationReport:
    """Decoupled mode: ``op_scripts`` drive the clients; ``verifiers``
    are extra process ids that only snapshot and check."""
    programs: dict[int, Program] = {
        p: client_process(sys_, p, ops) for p, ops in op_scripts.items()}
    for v in verifiers:
        if v in programs:
            raise ValueError(f"process {v} cannot be client and verifier")
        sys_.ctxs.setdefault(v, ProcCtx(v))
        programs[v] = monitor_process(sys_, v)
    recorded = run(programs, schedule, sys_.memory, max_steps,
                   meta={**sys_.meta(), "mode": "monitor"})
    return collect_report(recorded)
