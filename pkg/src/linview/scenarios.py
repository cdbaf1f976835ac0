"""Canned runs that exhibit the phenomena the machinery is built around.

Each scenario is deterministic: fixed operations, fixed explicit
schedule, fresh memory.  Its claims are checked with plain asserts and a
report of human-readable lines is returned.  Timelines for the
hand-built histories are encodings of qualitative pictures; the asserted
claims are what matters, and each docstring states them.

The recurring buggy implementation is a queue whose first operation by
process 1 dequeues an item nobody enqueued.  It is honest-looking
locally (Enq acks, Deq answers empty) which makes it the minimal
counterexample for black-box checking: whether the phantom dequeue is
wrong depends only on real-time order that no process observes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .enforce import ScriptedInner, StarSystem, star_process
from .history import History, Op, equivalent, inv, res
from .membership import (Linearization, brute_force_linearizable,
                         check_linearization, is_linearizable)
from .seqspec import EMPTY, get_spec
from .sim import EmitI, Memory, ReadI, Schedule, WriteI, run
from .verifier import run_verification
from .views import build_history, lambda_of, validate_views

#: log entries per wrapped operation with a latency-0 scripted inner:
#: inv, announce write, inner inv, inner res, snapshot, res
STAR_STEPS = 6
#: entries for the record-and-check tail: publish write, snapshot, verdict
CHECK_STEPS = 3
ITER_STEPS = STAR_STEPS + CHECK_STEPS


def new_item_bug_inner() -> ScriptedInner:
    """Queue that invents an item: process 1's first operation returns 1
    if it is a Deq; every Enq acks and every other Deq answers empty."""
    def script(process: int, k: int, op: Op) -> object:
        if op.label == "Enq":
            return True
        if process == 1 and k == 0:
            return 1
        return EMPTY
    return ScriptedInner("new-item-bug", script)


@dataclass
class ScenarioReport:
    name: str
    passed: bool = True
    lines: list[str] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def say(self, text: str) -> None:
        self.lines.append(text)

    def render(self) -> str:
        head = f"scenario {self.name}: {'ok' if self.passed else 'FAILED'}"
        return "\n".join([head, *("  " + ln for ln in self.lines)])


def _claim(report: ScenarioReport, ok: bool, text: str) -> None:
    report.say(("PASS " if ok else "FAIL ") + text)
    if not ok:
        report.passed = False
        raise AssertionError(f"{report.name}: {text}")


# -- hand-built histories ------------------------------------------------

def stack_same_views() -> ScenarioReport:
    """Two stack histories with identical per-process event sequences;
    only the real-time order differs, yet one is a member and the other
    is not.  This is why local observation alone cannot settle
    membership."""
    r = ScenarioReport("stack-same-views")
    push = Op(1, "1.0", "Push", 1)
    pop = Op(2, "2.0", "Pop")
    top = History((inv(push), res(push, True), inv(pop), res(pop, 1)))
    bottom = History((inv(pop), res(pop, 1), inv(push), res(push, True)))
    spec = get_spec("stack")
    _claim(r, equivalent(top, bottom), "identical per-process views")
    _claim(r, is_linearizable(top, spec) is not None, "top history member")
    _claim(r, is_linearizable(bottom, spec) is None,
           "bottom history non-member (Pop of 1 ends before Push begins)")
    r.data.update(top=top, bottom=bottom)
    return r


def stack_accept_reject() -> ScenarioReport:
    """Three-process stack pair: the top history admits the linearization
    Push(2) Push(1) Pop():1 Pop():2; the bottom one has a Pop():empty
    that starts after Push(1) completed while nothing could have removed
    the item, so no linearization exists."""
    r = ScenarioReport("stack-accept-reject")
    spec = get_spec("stack")
    pu1 = Op(1, "1.0", "Push", 1)
    pu2 = Op(2, "2.0", "Push", 2)
    po2 = Op(2, "2.1", "Pop")
    po3 = Op(3, "3.0", "Pop")
    top = History((inv(pu2), inv(pu1), res(pu2, True), res(pu1, True),
                   inv(po3), res(po3, 1), inv(po2), res(po2, 2)))
    lin = is_linearizable(top, spec)
    _claim(r, lin is not None, "top history member")
    _claim(r, check_linearization(top, spec, lin),
           "emitted linearization independently valid")
    caption = Linearization(((pu2, True), (pu1, True), (po3, 1), (po2, 2)),
                            {}, frozenset())
    _claim(r, check_linearization(top, spec, caption),
           "order Push(2) Push(1) Pop():1 Pop():2 is a valid linearization")

    pu = Op(1, "1.0", "Push", 1)
    poe = Op(2, "2.0", "Pop")
    po1 = Op(3, "3.0", "Pop")
    bottom = History((inv(pu), res(pu, True), inv(poe), res(poe, EMPTY),
                      inv(po1), res(po1, 1)))
    _claim(r, is_linearizable(bottom, spec) is None,
           "bottom history non-member (stack cannot be empty when "
           "Pop():empty starts)")
    _claim(r, not brute_force_linearizable(bottom, spec),
           "brute-force oracle agrees on the bottom history")
    r.data.update(top=top, bottom=bottom, top_linearization=lin)
    return r


def queue_stretch() -> ScenarioReport:
    """Recording invocations before the call and responses after it
    stretches operations outward in the captured history.  Stretching
    preserves membership; with long enough delays it can also mask a
    violation: the captured history of a non-member run may be a member."""
    r = ScenarioReport("queue-stretch")
    spec = get_spec("queue")
    enq = Op(2, "2.0", "Enq", 1)
    deq = Op(1, "1.0", "Deq")
    actual_top = History((inv(enq), res(enq, True), inv(deq), res(deq, 1)))
    detect_top = History((inv(enq), inv(deq), res(enq, True), res(deq, 1)))
    _claim(r, equivalent(actual_top, detect_top)
           and detect_top.prec_pairs() <= actual_top.prec_pairs(),
           "top captured history is a stretch of the actual one")
    _claim(r, is_linearizable(actual_top, spec) is not None
           and is_linearizable(detect_top, spec) is not None,
           "top: actual and captured both member")

    enq2 = Op(1, "1.0", "Enq", 1)
    deq2 = Op(2, "2.0", "Deq")
    actual_bot = History((inv(deq2), res(deq2, 1), inv(enq2),
                          res(enq2, True)))
    detect_bot = History((inv(enq2), inv(deq2), res(deq2, 1),
                          res(enq2, True)))
    _claim(r, equivalent(actual_bot, detect_bot)
           and detect_bot.prec_pairs() <= actual_bot.prec_pairs(),
           "bottom captured history is a stretch of the actual one")
    _claim(r, is_linearizable(actual_bot, spec) is None,
           "bottom actual history non-member")
    _claim(r, is_linearizable(detect_bot, spec) is not None,
           "bottom captured history member: a long announce-to-call delay "
           "of process 1 hides the violation")
    r.data.update(actual_top=actual_top, detected_top=detect_top,
                  actual_bot=actual_bot, detected_bot=detect_bot)
    return r


# -- wrapped runs --------------------------------------------------------

def _phantom_run(slots: list[int]) -> tuple[StarSystem, object]:
    sys_ = StarSystem(spec=get_spec("queue"), inner=new_item_bug_inner(),
                      procs=2)
    programs = {1: star_process(sys_, 1, [Op(1, "1.0", "Deq")]),
                2: star_process(sys_, 2, [Op(2, "2.0", "Enq", 1)])}
    rec = run(programs, Schedule.explicit(slots), sys_.memory,
              meta=sys_.meta())
    return sys_, rec


def queue_shrink() -> ScenarioReport:
    """Between the wrapper's boundaries, the announce write and the
    snapshot shrink each operation inward.  Top run: wrapper history
    member, captured history non-member; the captured history is still a
    faithful witness since no process can distinguish the two.  Bottom
    run: wrapper history non-member forces the captured one non-member."""
    r = ScenarioReport("queue-shrink")
    spec = get_spec("queue")

    slots_top = [1, 1, 1, 1, 2, 1, 1, 2, 2, 2, 2, 2]
    _, rec = _phantom_run(slots_top)
    star = rec.star_history()
    lam = lambda_of(rec)
    captured = build_history(lam)
    _claim(r, validate_views(lam) is None, "top: harvested views well formed")
    _claim(r, is_linearizable(star, spec) is not None,
           "top: wrapper history member")
    _claim(r, is_linearizable(captured, spec) is None,
           "top: captured history non-member (snapshot of the phantom Deq "
           "lands before the Enq announce)")
    _claim(r, equivalent(captured, star)
           and star.prec_pairs() <= captured.prec_pairs(),
           "top: captured history shrinks the wrapper history, so it is a "
           "genuine witness")

    slots_bot = [1] * 6 + [2] * 6
    _, rec2 = _phantom_run(slots_bot)
    star2 = rec2.star_history()
    captured2 = build_history(lambda_of(rec2))
    _claim(r, is_linearizable(star2, spec) is None,
           "bottom: wrapper history non-member")
    _claim(r, is_linearizable(captured2, spec) is None,
           "bottom: captured history non-member too")
    r.data.update(star_top=star, captured_top=captured,
                  star_bot=star2, captured_bot=captured2)
    return r


def queue_fix() -> ScenarioReport:
    """With overlap between the phantom Deq and the Enq at the wrapper
    level, the wrapper turns a non-member inner history into a member
    one: announce-to-snapshot windows intersect, so both the wrapper
    history and the captured history order the operations freely."""
    r = ScenarioReport("queue-fix")
    spec = get_spec("queue")
    slots = [1, 1, 1, 1, 2, 2, 1, 1, 2, 2, 2, 2]
    _, rec = _phantom_run(slots)
    inner = rec.inner_history()
    star = rec.star_history()
    captured = build_history(lambda_of(rec))
    _claim(r, is_linearizable(inner, spec) is None,
           "inner history non-member (Deq of 1 completes before the Enq)")
    _claim(r, is_linearizable(star, spec) is not None,
           "wrapper history member")
    _claim(r, is_linearizable(captured, spec) is not None,
           "captured history member: the bug is fixed, not detected")
    r.data.update(inner=inner, star=star, captured=captured)
    return r


def phantom_item_detected() -> ScenarioReport:
    """Full verification of the phantom-item queue under the adversarial
    schedule: process 1's whole wrapped Deq and its check run before
    process 2 announces, so the first verdict already sees the phantom
    item alone and errors; every later verdict keeps erroring."""
    r = ScenarioReport("phantom-item-detected")
    sys_ = StarSystem(spec=get_spec("queue"), inner=new_item_bug_inner(),
                      procs=2)
    scripts = {1: [Op(1, "1.0", "Deq"), Op(1, "1.1", "Deq"),
                   Op(1, "1.2", "Deq")],
               2: [Op(2, "2.0", "Enq", 1), Op(2, "2.1", "Deq"),
                   Op(2, "2.2", "Deq")]}
    slots = ([1] * STAR_STEPS + [2] * STAR_STEPS
             + [1] * CHECK_STEPS + [2] * CHECK_STEPS
             + [2] * ITER_STEPS + [1] * ITER_STEPS
             + [2] * ITER_STEPS + [1] * ITER_STEPS)
    sched = Schedule.explicit(slots, fair_tail=True)
    rep = run_verification(sys_, scripts, sched)
    flags = [v.error for v in rep.verdicts]
    _claim(r, len(flags) == 6, "all six iterations produced verdicts")
    _claim(r, any(flags), "at least one error verdict")
    _claim(r, flags[0], "the very first verdict errors")
    first = flags.index(True)
    _claim(r, all(flags[first:]), "every verdict after the first error "
           "also errors")
    for v in rep.verdicts:
        if v.error:
            _claim(r, v.witness is not None
                   and is_linearizable(v.witness, sys_.spec) is None,
                   f"witness of {v.uid} fails membership")
    r.say(rep.summary())
    r.data.update(report=rep)
    return r


# -- the black-box dead end ----------------------------------------------

def _naive_decisions():
    """Decision rules a black-box checker could plug in at the end of an
    iteration, given only the per-cell records it read back."""
    queue = get_spec("queue")

    def silent(reads: tuple) -> bool:
        return False

    def flag_nonmember(reads: tuple) -> bool:
        events = []
        for cell in reads:
            for kind, op, value in cell or ():
                events.append(inv(op) if kind == "inv" else res(op, value))
        return is_linearizable(History(events), queue) is None

    def parity(reads: tuple) -> bool:
        return sum(len(cell or ()) for cell in reads) % 2 == 1

    return {"silent": silent, "flag-nonmember": flag_nonmember,
            "parity": parity}


def _naive_verifier(mem: Memory, arr, inner: ScriptedInner, p: int,
                    ops: list[Op], decide, observed: list):
    """Generic checking loop without announcements: record the
    invocation, call the black box, record the response, read everything
    back, decide.  ``observed`` collects everything this process sees."""
    record: list = []
    for op in ops:
        record.append(("inv", op, None))
        yield WriteI(arr, p - 1, tuple(record), ctx="naive", uid=op.uid)
        observed.append(("write", len(record)))
        y = yield from inner.call(op)
        observed.append(("inner", op.label, op.argument, y))
        record.append(("res", op, y))
        yield WriteI(arr, p - 1, tuple(record), ctx="naive", uid=op.uid)
        observed.append(("write", len(record)))
        reads = []
        for k in range(arr.n):
            got = yield ReadI(arr, k, ctx="naive", uid=op.uid)
            reads.append(got.value)
        observed.append(("reads", tuple(reads)))
        verdict = decide(tuple(reads))
        observed.append(("decision", verdict))
        yield EmitI("decision", "naive", op.uid, verdict)


def _naive_execution(swap: bool, decide) -> tuple:
    """One full run of the naive checker against the phantom-item queue.
    ``swap`` exchanges whose black-box call happens first; everything
    else, including the read-back order, stays put."""
    mem = Memory()
    arr = mem.new_array("S", 2, initial=())
    inner = new_item_bug_inner()
    ops1 = [Op(1, "1.0", "Deq"), Op(1, "1.1", "Deq"), Op(1, "1.2", "Deq")]
    ops2 = [Op(2, "2.0", "Enq", 1), Op(2, "2.1", "Deq"),
            Op(2, "2.2", "Deq")]
    seen: dict[int, list] = {1: [], 2: []}
    programs = {
        1: _naive_verifier(mem, arr, inner, 1, ops1, decide, seen[1]),
        2: _naive_verifier(mem, arr, inner, 2, ops2, decide, seen[2]),
    }
    first = [1, 2, 1, 1, 2, 2, 1, 1, 1, 1, 2, 2, 2, 2] if not swap \
        else [1, 2, 2, 2, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2]
    tail = [2] * 7 + [1] * 7 + [2] * 7 + [1] * 7
    rec = run(programs, Schedule.explicit(first + tail), mem,
              meta={"mode": "naive", "swap": swap})
    return rec, seen


def impossibility_demo() -> ScenarioReport:
    """Two runs of a naive black-box checker that differ only in which
    hidden inner call happens first.  Every process sees the exact same
    things in both, so any decision rule behaves identically, yet one
    run's inner history has a non-member prefix and the other's prefixes
    are all members.  No such checker can be both sound and complete."""
    r = ScenarioReport("impossibility")
    queue = get_spec("queue")
    outcomes = {}
    for name, decide in _naive_decisions().items():
        rec_e, seen_e = _naive_execution(False, decide)
        rec_f, seen_f = _naive_execution(True, decide)
        for p in (1, 2):
            _claim(r, seen_e[p] == seen_f[p],
                   f"{name}: process {p} observes identical sequences in "
                   "both runs")
        dec_e = [e.value for e in rec_e.entries if e.kind == "decision"]
        dec_f = [e.value for e in rec_f.entries if e.kind == "decision"]
        _claim(r, dec_e == dec_f,
               f"{name}: identical decisions in both runs")
        outcomes[name] = dec_e

        inner_e = rec_e.inner_history()
        inner_f = rec_f.inner_history()
        bad = [len(pre.events) for pre in inner_e.prefixes()
               if is_linearizable(pre, queue) is None]
        _claim(r, bad, f"{name}: first run's inner history has a "
               "non-member prefix")
        _claim(r, all(is_linearizable(pre, queue) is not None
                      for pre in inner_f.prefixes()),
               f"{name}: every prefix of the second run's inner history "
               "is a member")
        if name == "flag-nonmember":
            r.say(f"shortest non-member prefix of the first run: "
                  f"{min(bad)} events")
            r.data["bad_prefix_events"] = min(bad)
    for name, dec in outcomes.items():
        verdicting = any(dec)
        r.say(f"rule {name}: {'reports' if verdicting else 'never reports'} "
              "an error in both runs, so it is "
              + ("unsound on the healthy run" if verdicting
                 else "incomplete on the broken run"))
    r.data.update(decisions=outcomes)
    return r


# -- randomized campaign -------------------------------------------------

def fuzz_campaign(spec_name: str = "queue", inner: str = "correct",
                  runs: int = 100, seed: int = 0, procs: int = 3,
                  ops_per_proc: int = 3, engine: str = "atomic") -> dict:
    """Randomized verification runs; aggregates verdicts and checks the
    harvested views of every run.  Detection rate for buggy inners is
    reported, never asserted: short schedules may let the wrapper fix
    the run."""
    import random as _random

    from . import gen
    from .enforce import AtomicInner

    rng = _random.Random(seed)
    stats = {"runs": runs, "verdicts": 0, "errors": 0, "error_runs": 0,
             "view_violations": 0, "first_error_iter": []}
    for _ in range(runs):
        spec = get_spec(spec_name)
        mk = AtomicInner(spec) if inner == "correct" else new_item_bug_inner()
        sys_ = StarSystem(spec=spec, inner=mk, procs=procs, engine=engine)
        scripts = {p: gen.op_script(spec_name, p, ops_per_proc, rng)
                   for p in range(1, procs + 1)}
        rep = run_verification(sys_, scripts, gen.random_schedule(rng, procs),
                               max_steps=20_000)
        stats["verdicts"] += len(rep.verdicts)
        errs = [i for i, v in enumerate(rep.verdicts) if v.error]
        stats["errors"] += len(errs)
        if errs:
            stats["error_runs"] += 1
            stats["first_error_iter"].append(errs[0])
        if validate_views(lambda_of(rep.recorded)) is not None:
            stats["view_violations"] += 1
    if inner != "correct" and runs:
        stats["detection_rate"] = stats["error_runs"] / runs
    return stats


SCENARIOS = {
    "stack-same-views": stack_same_views,
    "stack-accept-reject": stack_accept_reject,
    "queue-stretch": queue_stretch,
    "queue-shrink": queue_shrink,
    "queue-fix": queue_fix,
    "phantom-item-detected": phantom_item_detected,
    "impossibility": impossibility_demo,
}


def run_scenario(name: str) -> ScenarioReport:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from "
                       f"{sorted(SCENARIOS)}")
    return SCENARIOS[name]()
