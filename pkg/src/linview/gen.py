"""Random generators: operation scripts, schedules, and histories.

Everything takes an explicit ``random.Random`` so fuzz runs are
reproducible from a seed.  The similarity transforms produce pairs with
a known answer by construction; the test suite leans on them to check
the matcher and the closure of the checked objects without trusting the
code under test.
"""

from __future__ import annotations

import random

from .history import Event, History, Op, inv, res
from .seqspec import EMPTY, SPEC_LABELS, get_spec
from .sim import Schedule

VALUES = (1, 2, 3)

#: Results a fuzzer may invent for each catalog spec.  Deliberately a
#: superset of what the spec can produce so random histories cover both
#: members and non-members.
RESULT_POOL: dict[str, tuple] = {
    "queue": VALUES + (EMPTY, True),
    "stack": VALUES + (EMPTY, True),
    "pqueue": VALUES + (EMPTY, True),
    "set": (True, False),
    "counter": (0, 1, 2, 3),
    "register": VALUES + (0, True),
    "consensus": VALUES,
}


def random_op(spec_name: str, process: int, k: int,
              rng: random.Random) -> Op:
    label, takes_arg = rng.choice(SPEC_LABELS[spec_name])
    arg = rng.choice(VALUES) if takes_arg else None
    return Op(process, f"{process}.{k}", label, arg)


def op_script(spec_name: str, process: int, count: int,
              rng: random.Random) -> list[Op]:
    return [random_op(spec_name, process, k, rng) for k in range(count)]


def random_schedule(rng: random.Random, procs: int,
                    biased: bool = False) -> Schedule:
    """Seeded schedule; ``biased`` skews step frequency per process."""
    weights = {p: rng.randint(1, 6) for p in range(1, procs + 1)} \
        if biased else None
    return Schedule.random(seed=rng.getrandbits(32), weights=weights)


# -- whole-history generators --------------------------------------------

def random_history(rng: random.Random, spec_name: str, procs: int,
                   max_ops: int, res_prob: float = 0.55) -> History:
    """Well-formed history with freely invented results.

    Interleaves processes at random; a process with an operation in
    flight responds with probability ``res_prob`` per visit, so runs of
    all lengths keep a mix of complete and pending operations.
    """
    pool = RESULT_POOL[spec_name]
    events: list[Event] = []
    pending: dict[int, Op] = {}
    counts = {p: 0 for p in range(1, procs + 1)}
    budget = max_ops
    while budget > 0 or pending:
        p = rng.randint(1, procs)
        if p in pending and rng.random() < res_prob:
            events.append(res(pending.pop(p), rng.choice(pool)))
        elif p not in pending and budget > 0:
            op = random_op(spec_name, p, counts[p], rng)
            counts[p] += 1
            budget -= 1
            pending[p] = op
            events.append(inv(op))
        elif budget == 0 and pending and rng.random() < 0.5:
            break  # leave the rest pending
    return History(tuple(events))


def linearizable_history(rng: random.Random, spec_name: str, procs: int,
                         max_ops: int, res_prob: float = 0.55) -> History:
    """History that is linearizable by construction.

    Results are produced by running the spec at response time, so the
    response order itself is a valid linearization and any operation
    left pending can simply be dropped.
    """
    spec = get_spec(spec_name)
    state = spec.initial
    events: list[Event] = []
    pending: dict[int, Op] = {}
    counts = {p: 0 for p in range(1, procs + 1)}
    budget = max_ops
    while budget > 0 or pending:
        p = rng.randint(1, procs)
        if p in pending and rng.random() < res_prob:
            op = pending.pop(p)
            state, result = rng.choice(spec.steps(state, op))
            events.append(res(op, result))
        elif p not in pending and budget > 0:
            op = random_op(spec_name, p, counts[p], rng)
            counts[p] += 1
            budget -= 1
            pending[p] = op
            events.append(inv(op))
        elif budget == 0 and pending and rng.random() < 0.5:
            break
    return History(tuple(events))


# -- similarity transforms -----------------------------------------------
# Each returns a history similar to its input by construction, so pairs
# (transform(f), f) are positive test cases with no oracle needed.

def stretch(rng: random.Random, f: History, passes: int = 3) -> History:
    """Move responses later and invocations earlier across other
    processes' events.  Projections are untouched; real-time order only
    loses pairs."""
    events = list(f.events)
    if len(events) < 2:
        return f
    for _ in range(passes * len(events)):
        i = rng.randrange(len(events) - 1)
        a, b = events[i], events[i + 1]
        if a.op.process == b.op.process:
            continue
        # moving inv later past a res would add real-time pairs
        if not (a.kind == "inv" and b.kind == "res") \
                and rng.random() < 0.5:
            events[i], events[i + 1] = b, a
    return History(tuple(events))


def strip_final_responses(rng: random.Random, f: History) -> History:
    """Delete some responses that are the last event of their process,
    turning those operations pending."""
    drop: set[int] = set()
    last_by_proc: dict[int, int] = {}
    for i, e in enumerate(f.events):
        last_by_proc[e.op.process] = i
    for p, i in last_by_proc.items():
        if f.events[i].kind == "res" and rng.random() < 0.6:
            drop.add(i)
    events = tuple(e for i, e in enumerate(f.events) if i not in drop)
    return History(events)


def append_pending(rng: random.Random, f: History, spec_name: str,
                   at_most: int = 2) -> History:
    """Tack fresh never-responding invocations onto the end."""
    counts: dict[int, int] = {}
    for op in f.ops.values():
        counts[op.process] = counts.get(op.process, 0) + 1
    procs = sorted(counts) or [1]
    events = list(f.events)
    busy = set(f.op(uid).process for uid in f.pending_uids())
    for _ in range(rng.randint(1, at_most)):
        free = [p for p in procs if p not in busy]
        if not free:
            break
        p = rng.choice(free)
        busy.add(p)
        taken = set(f.ops)
        k = counts.get(p, 0)
        while f"{p}.{k}" in taken:
            k += 1
        op = random_op(spec_name, p, k, rng)
        counts[p] = k + 1
        events.append(inv(op))
    return History(tuple(events))


def similar_variant(rng: random.Random, f: History,
                    spec_name: str) -> History:
    """Random composition of the three transforms; always similar to f."""
    e = f
    if rng.random() < 0.7:
        e = strip_final_responses(rng, e)
    if rng.random() < 0.7:
        e = append_pending(rng, e, spec_name)
    if rng.random() < 0.8:
        e = stretch(rng, e)
    return e
