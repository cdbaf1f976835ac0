"""Coupled and monitor-mode verification runs."""

import pytest

from linview.enforce import AtomicInner, StarSystem
from linview.history import Op
from linview.membership import is_linearizable
from linview.scenarios import new_item_bug_inner
from linview.seqspec import get_spec
from linview.sim import Schedule
from linview.verifier import run_monitor_mode, run_verification


def queue_system(inner=None, procs=2):
    spec = get_spec("queue")
    return StarSystem(spec=spec, inner=inner or AtomicInner(spec),
                      procs=procs)


def scripts_2x2():
    return {1: [Op(1, "1.0", "Deq"), Op(1, "1.1", "Deq")],
            2: [Op(2, "2.0", "Enq", 1), Op(2, "2.1", "Deq")]}


# one coupled iteration: six wrapper steps, publish, snapshot, verdict
ITER = 9


def test_coupled_correct_inner_is_sound():
    rep = run_verification(queue_system(), scripts_2x2(),
                           Schedule.random(seed=71))
    assert len(rep.verdicts) == 4
    assert not rep.errors
    assert rep.first_error_step is None
    assert rep.summary() == "RESULT: SOUND"


def test_zero_budget_yields_no_verdicts():
    rep = run_verification(queue_system(), scripts_2x2(),
                           Schedule.random(seed=71), max_steps=0)
    assert rep.recorded.entries == []
    assert rep.verdicts == []


def test_identical_seeds_reproduce_the_verdict_log():
    runs = [run_verification(queue_system(), scripts_2x2(),
                             Schedule.random(seed=72)) for _ in range(2)]
    assert runs[0].recorded.entries == runs[1].recorded.entries
    assert runs[0].verdicts == runs[1].verdicts


def test_coupled_phantom_is_caught_and_stays_caught():
    sched = Schedule.explicit([1] * ITER + [2] * ITER, fair_tail=True)
    rep = run_verification(queue_system(new_item_bug_inner()),
                           scripts_2x2(), sched)
    assert rep.errors
    assert rep.summary() == f"RESULT: VIOLATION {rep.first_error_step}"
    flags = [v.error for v in rep.verdicts]
    assert all(flags[flags.index(True):])
    for v in rep.errors:
        assert is_linearizable(v.witness, get_spec("queue")) is None


def test_monitor_roles_must_not_overlap():
    with pytest.raises(ValueError, match="client and verifier"):
        run_monitor_mode(queue_system(), scripts_2x2(), verifiers=[2],
                         schedule=Schedule.random(seed=73))


def test_monitor_correct_inner_never_errors():
    rep = run_monitor_mode(queue_system(), scripts_2x2(), verifiers=[3],
                           schedule=Schedule.random(seed=74),
                           max_steps=400)
    assert rep.verdicts and not rep.errors


def test_clients_finish_even_with_every_verifier_crashed():
    sched = Schedule.random(seed=75, crash_at={3: 0, 4: 0})
    rep = run_monitor_mode(queue_system(), scripts_2x2(),
                           verifiers=[3, 4], schedule=sched)
    assert rep.verdicts == []
    star = rep.recorded.star_history()
    assert star.complete_uids() == ("1.0", "2.0", "1.1", "2.1") or \
        len(star.complete_uids()) == 4


def test_surviving_monitor_detects_the_phantom():
    # nobody enqueues a 1, so the phantom dequeue can never be explained
    scripts = {1: [Op(1, "1.0", "Deq")], 2: [Op(2, "2.0", "Enq", 5)]}
    sched = Schedule.random(seed=76, crash_at={3: 0})
    rep = run_monitor_mode(queue_system(new_item_bug_inner()), scripts,
                           verifiers=[3, 4], schedule=sched, max_steps=400)
    assert rep.errors
    assert all(e.value.process == 4 for e in rep.recorded.verdicts())
    assert is_linearizable(rep.errors[-1].witness, get_spec("queue")) is None
