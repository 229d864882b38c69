import pytest
from hypothesis import given, settings, strategies as st

from spidercc.protocols import (
    WAKEUP,
    Deliver,
    Kind,
    Message,
    ProtocolError,
    get_protocol,
    trim,
)
from spidercc.spider import CENTER, CRASH, MALICIOUS, TaskSpec, Vertex


def drive(name, spec, messages, pid=0, input=0, wake=True):
    """Feed messages (kind, value, sender) to one machine; return (state, decisions, sends)."""
    proto = get_protocol(name)
    st_ = proto.init(pid, input, spec)
    decisions, sends = [], []
    events = ([WAKEUP] if wake else []) + [Deliver(Message(k, v, s)) for k, v, s in messages]
    for ev in events:
        st_, out = proto.step(st_, ev, spec)
        if out.decision is not None:
            decisions.append(out.decision)
        sends.extend(m for _, m in out.outgoing)
    return st_, decisions, sends


def inputs(values, start=0):
    return [(Kind.INPUT, v, start + i) for i, v in enumerate(values)]


def branches(values, start=0):
    return [(Kind.BRANCH, v, start + i) for i, v in enumerate(values)]


# ---------------------------------------------------------------- unanimity exchange

def test_crash_unanimous_inputs():
    spec = TaskSpec(2, 1, 3, 1, CRASH)
    assert drive("crash_cc", spec, inputs([0, 0]))[1] == [Vertex(0, 1)]


def test_crash_mixed_inputs():
    spec = TaskSpec(2, 1, 3, 1, CRASH)
    assert drive("crash_cc", spec, inputs([0, 1]))[1] == [CENTER]


def test_crash_r2_bottom_branch_sees_value():
    spec = TaskSpec(2, 2, 5, 2, CRASH)
    _, dec, sends = drive("crash_cc", spec, inputs([0, 1, 0]) + branches([None, None, 1]))
    assert Message(Kind.BRANCH, None, 0) in sends
    assert dec == [Vertex(1, 1)]


def test_crash_r2_grades():
    spec = TaskSpec(2, 2, 5, 2, CRASH)
    assert drive("crash_cc", spec, inputs([1, 1, 1]) + branches([1, 1, 1]))[1] == [Vertex(1, 2)]
    assert drive("crash_cc", spec, inputs([1, 1, 1]) + branches([1, None, 1]))[1] == [Vertex(1, 1)]
    assert drive("crash_cc", spec, inputs([0, 1, 1]) + branches([None, None, None]))[1] == [CENTER]


def test_crash_r2_smallest_value_wins_ties():
    spec = TaskSpec(3, 2, 5, 2, CRASH)
    assert drive("crash_cc", spec, inputs([0, 1, 2]) + branches([2, None, 1]))[1] == [Vertex(1, 1)]


def test_only_first_quorum_of_inputs_counts():
    spec = TaskSpec(2, 1, 3, 1, CRASH)
    st_, dec, _ = drive("crash_cc", spec, inputs([0, 0, 1]))
    assert dec == [Vertex(0, 1)]
    assert len(st_.received_inputs) == 2


def test_duplicate_inputs_are_dropped():
    spec = TaskSpec(2, 1, 3, 1, CRASH)
    _, dec, _ = drive("crash_cc", spec, [(Kind.INPUT, 0, 1), (Kind.INPUT, 1, 1)])
    assert dec == []


def test_foreign_kind_is_an_error():
    spec = TaskSpec(2, 1, 3, 1, CRASH)
    with pytest.raises(ProtocolError):
        drive("crash_cc", spec, [(Kind.ECHO, 0, 1)])
    with pytest.raises(ProtocolError):
        drive("echo_cc", TaskSpec(2, 1, 4, 1, MALICIOUS), [(Kind.INPUT, 0, 1)])


def test_after_decision_deliveries_are_absorbed():
    spec = TaskSpec(2, 1, 3, 1, CRASH)
    proto = get_protocol("crash_cc")
    st_, _, _ = drive("crash_cc", spec, inputs([0, 0]))
    after, out = proto.step(st_, Deliver(Message(Kind.INPUT, 1, 2)), spec)
    assert after == st_ and out.decision is None and not out.outgoing


# ---------------------------------------------------------------- trimmed exchange

def test_trim_helper():
    assert trim([1, 0, 0, 1, 0], 1) == [0, 0, 1]
    assert trim([2, 7, 2, 2, 2], 1) == [2, 2, 2]


def test_trim_branch_bottom():
    spec = TaskSpec(2, 1, 6, 1, MALICIOUS)
    assert drive("trim_cc", spec, inputs([0, 0, 0, 1, 1]))[1] == [CENTER]


def test_trim_drops_outlier():
    spec = TaskSpec(8, 1, 6, 1, MALICIOUS)
    assert drive("trim_cc", spec, inputs([2, 2, 2, 2, 7]), input=2)[1] == [Vertex(2, 1)]


def test_trim_r2_bottom_needs_f_plus_one():
    spec = TaskSpec(2, 2, 6, 1, MALICIOUS)
    base = inputs([0, 0, 0, 1, 1])
    assert drive("trim_cc", spec, base + branches([None, None, None, 1, 1]))[1] == [Vertex(1, 1)]
    assert drive("trim_cc", spec, base + branches([None, None, None, None, 1]))[1] == [CENTER]


def test_trim_r2_strong_needs_n_minus_2f():
    spec = TaskSpec(2, 2, 6, 1, MALICIOUS)
    base = inputs([1, 1, 1, 1, 1])
    assert drive("trim_cc", spec, base + branches([1, 1, 1, 1, None]))[1] == [Vertex(1, 2)]
    assert drive("trim_cc", spec, base + branches([1, 1, 1, None, None]))[1] == [Vertex(1, 1)]


# ---------------------------------------------------------------- one-round algorithms

@pytest.mark.parametrize("values,want", [
    ([3] * 7, Vertex(3, 2)),
    ([0] * 5 + [1] * 2, Vertex(0, 1)),
    ([0] * 4 + [1] * 3, CENTER),
])
def test_oneround_crash(values, want):
    spec = TaskSpec(4, 2, 9, 2, CRASH)
    assert drive("oneround_crash", spec, inputs(values))[1] == [want]


@pytest.mark.parametrize("values,want", [
    ([5] * 13, Vertex(5, 2)),
    ([0] * 9 + [1] * 3 + [9], Vertex(0, 1)),
    ([0] * 7 + [1] * 6, CENTER),
])
def test_oneround_byz(values, want):
    spec = TaskSpec(10, 2, 14, 1, MALICIOUS)
    assert drive("oneround_byz", spec, inputs(values))[1] == [want]


def test_oneround_rejects_r1():
    with pytest.raises(ProtocolError):
        drive("oneround_crash", TaskSpec(2, 1, 9, 2, CRASH), [])


# ---------------------------------------------------------------- echo cascade

def echoes(kind, values, start=0):
    return [(kind, v, start + i) for i, v in enumerate(values)]


def test_echo_bottom_from_spread():
    spec = TaskSpec(3, 1, 4, 1, MALICIOUS)
    _, _, sends = drive("echo_cc", spec, echoes(Kind.ECHO, [0, 1, 2]))
    assert Message(Kind.ECHO, None, 0) in sends


def test_echo_r2_strong_decision():
    spec = TaskSpec(2, 2, 4, 1, MALICIOUS)
    assert drive("echo_cc", spec, echoes(Kind.ECHO5, [1, 1, 1]))[1] == [Vertex(1, 2)]


def test_echo_r1_value_decision():
    spec = TaskSpec(2, 1, 4, 1, MALICIOUS)
    assert drive("echo_cc", spec, echoes(Kind.ECHO3, [1, 1, 1]))[1] == [Vertex(1, 1)]


def test_echo_bottom_gate_prefers_center():
    spec = TaskSpec(2, 1, 4, 1, MALICIOUS)
    msgs = echoes(Kind.ECHO, [0, 0, 0]) + echoes(Kind.ECHO, [1, 1, 1]) + echoes(Kind.ECHO3, [1, 1, 1])
    st_, dec, sends = drive("echo_cc", spec, msgs)
    assert st_.approved == {0, 1}
    assert Message(Kind.ECHO3, None, 0) in sends
    assert dec == [CENTER]


def test_echo_amplifies_and_approves():
    spec = TaskSpec(2, 1, 4, 1, MALICIOUS)
    st_, _, sends = drive("echo_cc", spec, echoes(Kind.ECHO, [1, 1, 1], start=1), input=0)
    assert Message(Kind.ECHO, 1, 0) in sends
    assert Message(Kind.ECHO2, 1, 0) in sends
    assert st_.approved == {1}


def test_echo_dedup():
    spec = TaskSpec(2, 1, 4, 1, MALICIOUS)
    st_, _, _ = drive("echo_cc", spec, [(Kind.ECHO2, 0, 1), (Kind.ECHO2, 1, 1), (Kind.ECHO, 0, 1), (Kind.ECHO, 1, 1)])
    assert st_.num(Kind.ECHO2) == (1, 0, 0)
    assert st_.num_echo == (1, 1, 0)


def test_echo_keeps_echoing_after_deciding():
    spec = TaskSpec(2, 1, 4, 1, MALICIOUS)
    proto = get_protocol("echo_cc")
    st_, dec, _ = drive("echo_cc", spec, echoes(Kind.ECHO3, [0, 0, 0]))
    assert dec == [Vertex(0, 1)]
    for s in (1, 2):
        st_, out = proto.step(st_, Deliver(Message(Kind.ECHO, 1, s)), spec)
        assert out.decision is None
    assert any(m == Message(Kind.ECHO, 1, 0) for _, m in out.outgoing)


# ---------------------------------------------------------------- invariants

ALL = ["crash_cc", "trim_cc", "echo_cc", "oneround_crash", "oneround_byz"]
SPECS = {
    "crash_cc": TaskSpec(3, 2, 5, 2, CRASH),
    "trim_cc": TaskSpec(3, 2, 6, 1, MALICIOUS),
    "echo_cc": TaskSpec(3, 2, 4, 1, MALICIOUS),
    "oneround_crash": TaskSpec(3, 2, 9, 2, CRASH),
    "oneround_byz": TaskSpec(3, 2, 14, 1, MALICIOUS),
}


@st.composite
def event_runs(draw):
    name = draw(st.sampled_from(ALL))
    spec = SPECS[name]
    kinds = sorted(get_protocol(name).kinds)
    msg = st.tuples(st.sampled_from(kinds), st.sampled_from(list(range(spec.value_count)) + [None]),
                    st.integers(0, spec.n - 1))
    msgs = draw(st.lists(msg, max_size=60))
    msgs = [(k, v, s) for k, v, s in msgs if not (k is Kind.INPUT and v is None)]
    return name, spec, draw(st.integers(0, spec.value_count - 1)), msgs


@settings(max_examples=150, deadline=None)
@given(event_runs())
def test_replay_is_deterministic(run):
    name, spec, inp, msgs = run
    assert drive(name, spec, msgs, input=inp) == drive(name, spec, msgs, input=inp)


@settings(max_examples=200, deadline=None)
@given(event_runs())
def test_decides_at_most_once_and_within_budget(run):
    name, spec, inp, msgs = run
    st_, dec, sends = drive(name, spec, msgs, input=inp)
    assert len(dec) <= 1
    proto = get_protocol(name)
    assert len(sends) <= proto.broadcast_budget(spec.R, spec.value_count)
    if name == "echo_cc":
        echo_values = [m.value for m in sends if m.kind is Kind.ECHO]
        assert len(echo_values) == len(set(echo_values)) <= spec.value_count + 1
        for kind in (Kind.ECHO2, Kind.ECHO3, Kind.ECHO4, Kind.ECHO5):
            assert sum(m.kind is kind for m in sends) <= 1
        assert all(c <= spec.n for level in st_.counts for c in level)


@settings(max_examples=150, deadline=None)
@given(event_runs())
def test_echo_flags_only_grow(run):
    name, spec, inp, msgs = run
    if name != "echo_cc":
        return
    proto = get_protocol(name)
    prev = proto.init(0, inp, spec)
    prev, _ = proto.step(prev, WAKEUP, spec)
    for k, v, s in msgs:
        nxt, _ = proto.step(prev, Deliver(Message(k, v, s)), spec)
        assert prev.approved <= nxt.approved
        assert all(a <= b for a, b in zip(prev.sent_echo, nxt.sent_echo))
        assert all(a <= b for a, b in zip(prev.sent_level, nxt.sent_level))
        assert prev.decision is None or nxt.decision == prev.decision
        prev = nxt
