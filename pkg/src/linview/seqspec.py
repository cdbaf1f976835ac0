"""Sequential object specifications as state machines.

A spec maps (state, operation) to the set of admissible (next state,
result) pairs; an empty set means the operation is illegal in that state.
All catalog specs are deterministic (singleton sets), but ``accepts``
searches over branches so nondeterministic specs plug in unchanged.

States must be hashable: membership checking memoizes on them.

Operations that remove from an empty container answer the reserved result
``"empty"``; object values should avoid that string.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable, Sequence

from .history import Op

EMPTY = "empty"

Steps = tuple[tuple[object, object], ...]
SeqHistory = Sequence[tuple[Op, object]]


@dataclass(frozen=True)
class SeqSpec:
    name: str
    initial: object
    delta: Callable[[object, Op], Steps]

    def steps(self, state: object, op: Op) -> Steps:
        return self.delta(state, op)


def accepts(spec: SeqSpec, seq: SeqHistory) -> bool:
    """Whether some run of the spec produces exactly these results."""
    states = {spec.initial}
    for op, result in seq:
        states = {s2 for s in states
                  for (s2, r) in spec.delta(s, op) if r == result}
        if not states:
            return False
    return True


# -- catalog -------------------------------------------------------------

def _queue_delta(state: tuple, op: Op) -> Steps:
    if op.label == "Enq":
        return ((state + (op.argument,), True),)
    if op.label == "Deq":
        if not state:
            return ((state, EMPTY),)
        return ((state[1:], state[0]),)
    return ()


def _stack_delta(state: tuple, op: Op) -> Steps:
    if op.label == "Push":
        return ((state + (op.argument,), True),)
    if op.label == "Pop":
        if not state:
            return ((state, EMPTY),)
        return ((state[:-1], state[-1]),)
    return ()


def _set_delta(state: frozenset, op: Op) -> Steps:
    if op.label == "Add":
        return ((state | {op.argument}, True),)
    if op.label == "Remove":
        if op.argument in state:
            return ((state - {op.argument}, True),)
        return ((state, False),)
    if op.label == "Contains":
        return ((state, op.argument in state),)
    return ()


def _counter_delta(state: int, op: Op) -> Steps:
    if op.label == "Inc":
        return ((state + 1, state + 1),)
    if op.label == "Read":
        return ((state, state),)
    return ()


def _register_delta(state: object, op: Op) -> Steps:
    if op.label == "Write":
        return ((op.argument, True),)
    if op.label == "Read":
        return ((state, state),)
    return ()


def _pqueue_delta(state: tuple, op: Op) -> Steps:
    if op.label == "Ins":
        items = list(state)
        bisect.insort(items, op.argument)
        return ((tuple(items), True),)
    if op.label == "ExtractMin":
        if not state:
            return ((state, EMPTY),)
        return ((state[1:], state[0]),)
    return ()


def _consensus_delta(state: object, op: Op) -> Steps:
    if op.label == "Decide":
        if state is None:
            return ((op.argument, op.argument),)
        return ((state, state),)
    return ()


def catalog() -> dict[str, SeqSpec]:
    return {
        "queue": SeqSpec("queue", (), _queue_delta),
        "stack": SeqSpec("stack", (), _stack_delta),
        "set": SeqSpec("set", frozenset(), _set_delta),
        "counter": SeqSpec("counter", 0, _counter_delta),
        "register": SeqSpec("register", 0, _register_delta),
        "pqueue": SeqSpec("pqueue", (), _pqueue_delta),
        "consensus": SeqSpec("consensus", None, _consensus_delta),
    }


def get_spec(name: str) -> SeqSpec:
    specs = catalog()
    if name not in specs:
        raise KeyError(f"unknown spec {name!r}; choose from {sorted(specs)}")
    return specs[name]


#: Operation labels each catalog spec understands, with whether they take
#: an argument.  Used by generators and the CLI to build op streams.
SPEC_LABELS: dict[str, tuple[tuple[str, bool], ...]] = {
    "queue": (("Enq", True), ("Deq", False)),
    "stack": (("Push", True), ("Pop", False)),
    "set": (("Add", True), ("Remove", True), ("Contains", True)),
    "counter": (("Inc", False), ("Read", False)),
    "register": (("Write", True), ("Read", False)),
    "pqueue": (("Ins", True), ("ExtractMin", False)),
    "consensus": (("Decide", True),),
}


def snapshot_spec(n: int) -> SeqSpec:
    """Atomic snapshot over ``n`` single-writer cells.

    Process p owns cell p-1.  ``Write(v)`` stores v in the caller's cell;
    ``Snap()`` answers the whole vector.  Used to validate the simulated
    snapshot engines against their sequential meaning.
    """
    def delta(state: tuple, op: Op) -> Steps:
        if op.label == "Write":
            cells = list(state)
            cells[op.process - 1] = op.argument
            return ((tuple(cells), True),)
        if op.label == "Snap":
            return ((state, state),)
        return ()
    return SeqSpec(f"snapshot{n}", (0,) * n, delta)
