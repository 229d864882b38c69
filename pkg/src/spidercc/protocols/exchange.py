"""Round-based exchange protocols.

The unanimity exchange (crash, n > 2f), the trimmed exchange (malicious,
n > 5f) and the two one-round R = 2 algorithms all follow the same skeleton: broadcast the
input, wait for n - f INPUT messages, then either decide or broadcast a
branch and wait for n - f BRANCH messages.  Only the rules applied to the
collected values differ.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Optional

from ..spider import CENTER, Vertex
from .base import (
    NO_OUTPUT,
    Deliver,
    Kind,
    Message,
    ProtocolError,
    StepOutput,
    Wakeup,
    value_ok,
)

_KINDS = frozenset({Kind.INPUT, Kind.BRANCH})
_ONE_ROUND_KINDS = frozenset({Kind.INPUT})


@dataclass(frozen=True)
class ExchangeState:
    pid: int
    input: int
    awake: bool = False
    # (sender, value) sorted by sender, at most one per sender; never more than n - f
    received_inputs: tuple = ()
    branch_chosen: bool = False
    branch: Optional[int] = None
    received_branches: tuple = ()
    decision: Optional[Vertex] = None

    @property
    def decided(self) -> bool:
        return self.decision is not None


CrashCCState = TrimCCState = OneRoundState = ExchangeState


def abstract(state: ExchangeState) -> tuple:
    """Everything that shapes future behaviour once awake: no ids, no input."""
    d = state.decision
    return (
        state.awake,
        tuple(sorted(v for _, v in state.received_inputs)),
        state.branch_chosen,
        -1 if state.branch is None else state.branch,
        tuple(sorted(-1 if v is None else v for _, v in state.received_branches)),
        () if d is None else (-1 if d.value is None else d.value, d.grade),
    )


def init_state(pid: int, input: int, spec) -> ExchangeState:
    if not (0 <= input < spec.value_count):
        raise ValueError(f"input {input} outside 0..{spec.value_count - 1}")
    return ExchangeState(pid=pid, input=input)


def trim(values, f: int) -> list:
    """Sorted multiset with the f smallest and f largest entries dropped."""
    ordered = sorted(values)
    return ordered[f:len(ordered) - f] if f else ordered


def _unanimous(values) -> Optional[int]:
    first = values[0] if values else None
    if first is not None and all(v == first for v in values):
        return first
    return None


# -- per-algorithm rules ---------------------------------------------------

def _crash_branch(values, spec):
    return _unanimous(values)


def _trim_branch(values, spec):
    return _unanimous(trim(values, spec.f))


def _crash_round2(branch, values, spec) -> Vertex:
    present = sorted({v for v in values if v is not None})
    if branch is None:
        return Vertex(present[0], 1) if present else CENTER
    v = _unanimous(values)
    return Vertex(v, 2) if v is not None else Vertex(branch, 1)


def _trim_round2(branch, values, spec) -> Vertex:
    counts = Counter(v for v in values if v is not None)
    threshold = spec.f + 1 if branch is None else spec.n - 2 * spec.f
    hits = sorted(v for v, c in counts.items() if c >= threshold)
    if branch is None:
        return Vertex(hits[0], 1) if hits else CENTER
    return Vertex(hits[0], 2) if hits else Vertex(branch, 1)


def _oneround_crash_decide(values, spec) -> Vertex:
    v = _unanimous(values)
    if v is not None:
        return Vertex(v, 2)
    counts = Counter(values)
    hits = sorted(v for v, c in counts.items() if c >= spec.n - 2 * spec.f)
    return Vertex(hits[0], 1) if hits else CENTER


def _oneround_byz_decide(values, spec) -> Vertex:
    kept = trim(values, spec.f)
    v = _unanimous(kept)
    if v is not None:
        return Vertex(v, 2)
    counts = Counter(kept)
    hits = sorted(v for v, c in counts.items() if c >= spec.n - 6 * spec.f)
    return Vertex(hits[0], 1) if hits else CENTER


# -- skeleton ---------------------------------------------------------------

def _broadcast(spec, kind, value, pid) -> tuple:
    return (tuple(range(spec.n)), Message(kind, value, pid))


def _absorb(state: ExchangeState, message: Message, spec, kinds) -> ExchangeState:
    if message.kind not in kinds:
        raise ProtocolError(f"{message.kind.name} is not part of this algorithm")
    if not value_ok(message.value, spec):
        return state
    if message.kind is Kind.INPUT:
        if message.value is None or state.branch_chosen:
            return state
        if any(s == message.sender for s, _ in state.received_inputs):
            return state
        return replace(state, received_inputs=tuple(sorted(state.received_inputs + ((message.sender, message.value),))))
    if any(s == message.sender for s, _ in state.received_branches):
        return state
    if len(state.received_branches) >= spec.n - spec.f:
        return state
    return replace(state, received_branches=tuple(sorted(
        state.received_branches + ((message.sender, message.value),), key=lambda sv: sv[0])))


def _step(state, event, spec, *, choose_branch=None, round2=None, one_round=None):
    if state.decided:
        return state, NO_OUTPUT
    outgoing = []
    if isinstance(event, Wakeup):
        if state.awake:
            return state, NO_OUTPUT
        state = replace(state, awake=True)
        outgoing.append(_broadcast(spec, Kind.INPUT, state.input, state.pid))
    elif isinstance(event, Deliver):
        state = _absorb(state, event.message, spec, _KINDS if one_round is None else _ONE_ROUND_KINDS)
    else:
        raise ProtocolError(f"unknown event {event!r}")

    quorum = spec.n - spec.f
    decision = None
    if not state.branch_chosen and len(state.received_inputs) >= quorum:
        values = [v for _, v in state.received_inputs[:quorum]]
        if one_round is not None:
            decision = one_round(values, spec)
            state = replace(state, branch_chosen=True, branch=decision.value)
        else:
            branch = choose_branch(values, spec)
            state = replace(state, branch_chosen=True, branch=branch)
            if spec.R == 1:
                decision = CENTER if branch is None else Vertex(branch, 1)
            else:
                outgoing.append(_broadcast(spec, Kind.BRANCH, branch, state.pid))
    if (
        decision is None
        and one_round is None
        and spec.R == 2
        and state.branch_chosen
        and len(state.received_branches) >= quorum
    ):
        values = [v for _, v in state.received_branches[:quorum]]
        decision = round2(state.branch, values, spec)
    if decision is not None:
        state = replace(state, decision=decision)
    return state, StepOutput(tuple(outgoing), decision)


def crash_cc_step(state: ExchangeState, event, spec):
    """Unanimity of the first n - f inputs picks the branch; crash-tolerant for n > 2f."""
    return _step(state, event, spec, choose_branch=_crash_branch, round2=_crash_round2)


def trim_cc_step(state: ExchangeState, event, spec):
    """Branch from the trimmed input multiset; malicious-tolerant for n > 5f."""
    return _step(state, event, spec, choose_branch=_trim_branch, round2=_trim_round2)


def oneround_crash_step(state: ExchangeState, event, spec):
    if spec.R != 2:
        raise ProtocolError("the one-round algorithm is defined for R = 2 only")
    return _step(state, event, spec, one_round=_oneround_crash_decide)


def oneround_byz_step(state: ExchangeState, event, spec):
    if spec.R != 2:
        raise ProtocolError("the one-round algorithm is defined for R = 2 only")
    return _step(state, event, spec, one_round=_oneround_byz_decide)
