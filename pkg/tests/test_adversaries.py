from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from spidercc.adversaries import (
    BYZ_STRATEGIES,
    SilentFaulty,
    late_cascade_script,
    byz_equivocator,
    random_crash,
)
from spidercc.protocols import Kind
from spidercc.simnet import check_model, run
from spidercc.spider import CRASH, MALICIOUS, TaskSpec, Vertex
from spidercc.verify import check_agreement, check_validity


def scripted(eps, f, R=1):
    adv = late_cascade_script(eps, f)
    trace = run(TaskSpec(2, R, 3 * f + 1, f, MALICIOUS), adv.script_inputs, adv, "echo_cc")
    return adv, trace


def first_send(trace, pid, kind, value):
    for r in trace.records:
        if r.proc == pid and any(m.kind is kind and m.value == value for _, m in r.sends):
            return r.time
    return None


@pytest.mark.parametrize("eps,f,last", [(F(1, 8), 2, F(39, 8)), (F(1, 4), 2, F(19, 4)), (F(1, 8), 3, F(39, 8))])
def test_cascade_lasts_until_just_before_five(eps, f, last):
    _, t = scripted(eps, f)
    assert t.last_correct_decision_time() == last == 5 - eps
    assert check_model(t) == []
    assert check_validity(t).ok and check_agreement(t).ok


@pytest.mark.parametrize("f", [2, 3])
def test_scripted_milestones(f):
    eps = F(1, 8)
    adv, t = scripted(eps, f)
    # p is the only correct process to approve 1 before time 2
    assert first_send(t, adv.p, Kind.ECHO2, 1) < 2
    for pid in adv.A + adv.B + (adv.q,):
        assert first_send(t, pid, Kind.ECHO2, 1) is None
    # B and p give up on a single value by time 3
    for pid in adv.B + (adv.p,):
        assert first_send(t, pid, Kind.ECHO3, None) <= 3
    # A and q approve 1 only at 4 - eps
    for pid in adv.A + (adv.q,):
        assert first_send(t, pid, Kind.ECHO3, None) == 4 - eps
    decided = t.correct_decisions()
    assert set(decided.values()) <= {Vertex(None, 0), Vertex(0, 1), Vertex(1, 1)}


def test_r2_script_runs_longer():
    _, t1 = scripted(F(1, 8), 2, R=1)
    _, t2 = scripted(F(1, 8), 2, R=2)
    assert t2.last_correct_decision_time() > t1.last_correct_decision_time()


def test_script_parameter_errors():
    with pytest.raises(ValueError):
        late_cascade_script(0, 2)
    with pytest.raises(ValueError):
        late_cascade_script(F(3, 4), 2)
    with pytest.raises(ValueError):
        late_cascade_script(F(1, 8), 1)
    adv = late_cascade_script(F(1, 8), 2)
    with pytest.raises(ValueError):
        run(TaskSpec(2, 1, 8, 2, MALICIOUS), (0,) * 8, adv, "echo_cc")
    with pytest.raises(ValueError):
        run(TaskSpec(2, 1, 7, 2, MALICIOUS), (1,) * 7, adv, "echo_cc")
    with pytest.raises(ValueError):
        run(TaskSpec(3, 1, 7, 2, MALICIOUS), adv.script_inputs, adv, "echo_cc")


def test_adversary_parameter_errors():
    with pytest.raises(ValueError):
        byz_equivocator(0, "bogus")
    with pytest.raises(ValueError):
        random_crash(0, delay_range=())
    with pytest.raises(ValueError):
        random_crash(0, delay_range=(0, 1))


def test_reusing_a_policy_replays():
    adv = byz_equivocator(5, "random")
    spec = TaskSpec(2, 2, 4, 1, MALICIOUS)
    assert run(spec, (0, 1, 1, 0), adv, "echo_cc").lines() == run(spec, (0, 1, 1, 0), adv, "echo_cc").lines()


def test_silent_faulty_never_send():
    t = run(TaskSpec(2, 1, 6, 1, MALICIOUS), (0, 1, 0, 1, 1, 0), SilentFaulty(), "trim_cc")
    assert all(r.proc not in t.faulty for r in t.records)
    assert len(t.faulty) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(BYZ_STRATEGIES), st.sampled_from([1, 2]),
       st.lists(st.integers(0, 1), min_size=4, max_size=4))
def test_equivocation_is_tolerated(seed, strategy, R, inputs):
    t = run(TaskSpec(2, R, 4, 1, MALICIOUS), tuple(inputs), byz_equivocator(seed, strategy), "echo_cc")
    assert check_model(t) == []
    assert len(t.correct_decisions()) == 3
    assert check_agreement(t).ok
    # unanimous correct inputs are the one case a double echo can spoil,
    # see test_double_echo_breaks_unanimity
    if len({inputs[p] for p in t.correct}) > 1:
        assert check_validity(t).ok


def test_double_echo_breaks_unanimity():
    # one faulty sender echoing both 1 and ⊥ meets the f+1 "other values"
    # threshold alone, so correct processes echo ⊥ although they all hold 0
    t = run(TaskSpec(2, 1, 4, 1, MALICIOUS), (0, 0, 0, 0), byz_equivocator(0, "flood"), "echo_cc")
    assert t.faulty == {3}
    assert first_send(t, 0, Kind.ECHO, None) == F(1, 2)
    v = check_validity(t)
    assert not v.ok and "(bot,0)" in v.witness
    assert check_agreement(t).ok


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 1))
def test_random_crash_respects_fault_budget(seed, prob):
    t = run(TaskSpec(2, 1, 5, 2, CRASH), (0, 1, 0, 1, 1), random_crash(seed, prob), "crash_cc")
    assert len(t.faulty) <= 2
    assert check_model(t) == []
