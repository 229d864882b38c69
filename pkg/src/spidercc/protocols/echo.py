"""Echo-cascade connected consensus for malicious faults with n > 3f.

Values travel through five levels of echo messages.  The handlers are
written as guards over threshold counters and re-evaluated to a fixpoint
after every delivery, in the fixed order G1..G8 below.  Every guard is
protected by a once-flag, so reaching a threshold late (or out of handler
order) still fires the action exactly once.

Counter arrays are indexed by value id, with ⊥ stored at index
``value_count``.
"""
from __future__ import annotations

from dataclasses import dataclass
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

KINDS = frozenset({Kind.ECHO, Kind.ECHO2, Kind.ECHO3, Kind.ECHO4, Kind.ECHO5})
_LEVEL = {Kind.ECHO: 0, Kind.ECHO2: 1, Kind.ECHO3: 2, Kind.ECHO4: 3, Kind.ECHO5: 4}


@dataclass(frozen=True)
class EchoCCState:
    pid: int
    input: int
    awake: bool
    approved: frozenset
    # counts[level][index]; level 0 is ECHO, level 4 is ECHO5
    counts: tuple
    sent_echo: tuple
    # sent flags for ECHO2..ECHO5
    sent_level: tuple
    seen: frozenset
    decision: Optional[Vertex] = None

    @property
    def decided(self) -> bool:
        return self.decision is not None

    @property
    def num_echo(self) -> tuple:
        return self.counts[0]

    def num(self, kind: Kind) -> tuple:
        return self.counts[_LEVEL[kind]]


def abstract(state: EchoCCState) -> tuple:
    """Everything that shapes future behaviour once awake: no ids, no input.

    The dedup ledger is left out; the explorer tracks in-flight messages,
    so a counted message can never be delivered twice.
    """
    d = state.decision
    return (
        state.awake,
        tuple(sorted(-1 if v is None else v for v in state.approved)),
        state.counts,
        state.sent_echo,
        state.sent_level,
        () if d is None else (-1 if d.value is None else d.value, d.grade),
    )


def init_state(pid: int, input: int, spec) -> EchoCCState:
    if not (0 <= input < spec.value_count):
        raise ValueError(f"input {input} outside 0..{spec.value_count - 1}")
    width = spec.value_count + 1
    zeros = (0,) * width
    return EchoCCState(
        pid=pid,
        input=input,
        awake=False,
        approved=frozenset(),
        counts=(zeros,) * 5,
        sent_echo=(False,) * width,
        sent_level=(False,) * 4,
        seen=frozenset(),
    )


class _Work:
    """Mutable scratch copy of a state for one step."""

    def __init__(self, s: EchoCCState, spec):
        self.spec = spec
        self.k = spec.value_count
        self.approved = set(s.approved)
        self.counts = [list(c) for c in s.counts]
        self.sent_echo = list(s.sent_echo)
        self.sent = list(s.sent_level)  # ECHO2..ECHO5
        self.decision = s.decision
        self.out: list[tuple[Kind, Optional[int]]] = []

    def value_of(self, i: int) -> Optional[int]:
        return None if i == self.k else i

    def send(self, kind: Kind, index: int) -> None:
        self.out.append((kind, self.value_of(index)))

    def bottom_gate(self) -> bool:
        return len(self.approved) > 1 or None in self.approved

    def run_guards(self) -> bool:
        n, f, R, k = self.spec.n, self.spec.f, self.spec.R, self.k
        quorum = n - f
        echo, echo2, echo3, echo4, echo5 = self.counts
        bot = k
        fired = False

        # G1: amplify any value with f+1 supporters
        for i in range(k + 1):
            if echo[i] >= f + 1 and not self.sent_echo[i]:
                self.sent_echo[i] = True
                self.send(Kind.ECHO, i)
                fired = True
        # G2: f+1 echoes outside the most common value -> echo ⊥
        if sum(echo) - max(echo) >= f + 1 and not self.sent_echo[bot]:
            self.sent_echo[bot] = True
            self.send(Kind.ECHO, bot)
            fired = True
        # G3: approve values with n-f echoes; the first one goes out in ECHO2
        for i in range(k + 1):
            v = self.value_of(i)
            if echo[i] >= quorum and v not in self.approved:
                self.approved.add(v)
                fired = True
                if not self.sent[0]:
                    self.sent[0] = True
                    self.send(Kind.ECHO2, i)
        # G4: two approved values -> ECHO3(⊥)
        if len(self.approved) > 1 and not self.sent[1]:
            self.sent[1] = True
            self.send(Kind.ECHO3, bot)
            fired = True
        # G5: n-f ECHO2 for one value -> ECHO3(v)
        for i in range(k + 1):
            if echo2[i] >= quorum and not self.sent[1]:
                self.sent[1] = True
                self.send(Kind.ECHO3, i)
                fired = True
        # G6: ECHO3 quorum
        if sum(echo3) >= quorum and self.bottom_gate():
            fired |= self._level3(bot)
        else:
            for i in range(k):
                if echo3[i] >= quorum:
                    fired |= self._level3(i)
                    break
        if R == 1:
            return fired
        # G7: ECHO4 quorum -> ECHO5
        if not self.sent[3]:
            for i in range(k + 1):
                if echo4[i] >= quorum:
                    self.sent[3] = True
                    self.send(Kind.ECHO5, i)
                    fired = True
                    break
            else:
                if sum(echo4) >= quorum and self.bottom_gate():
                    self.sent[3] = True
                    self.send(Kind.ECHO5, bot)
                    fired = True
        # G8: decide from ECHO5
        if self.decision is None:
            strong = [i for i in range(k) if echo5[i] >= quorum]
            if strong:
                self.decision = Vertex(strong[0], 2)
            elif sum(echo5) >= quorum and self.bottom_gate() and (
                weak := [w for w in range(k) if echo5[w] >= 1 and echo4[w] >= f + 1]
            ):
                self.decision = Vertex(weak[0], 1)
            elif echo5[bot] >= quorum:
                self.decision = CENTER
            fired |= self.decision is not None
        return fired

    def _level3(self, i: int) -> bool:
        if self.spec.R == 1:
            if self.decision is None:
                self.decision = CENTER if i == self.k else Vertex(i, 1)
                return True
            return False
        if not self.sent[2]:
            self.sent[2] = True
            self.send(Kind.ECHO4, i)
            return True
        return False


def echo_cc_step(state: EchoCCState, event, spec):
    if isinstance(event, Wakeup):
        if state.awake:
            return state, NO_OUTPUT
        w = _Work(state, spec)
        w.sent_echo[state.input] = True
        w.send(Kind.ECHO, state.input)
        seen = state.seen
        awake = True
    elif isinstance(event, Deliver):
        m = event.message
        if m.kind not in KINDS:
            raise ProtocolError(f"{m.kind.name} is not part of the echo cascade")
        key = m.dedup_key()
        if key in state.seen or not value_ok(m.value, spec):
            return state, NO_OUTPUT
        w = _Work(state, spec)
        w.counts[_LEVEL[m.kind]][spec.value_count if m.value is None else m.value] += 1
        seen = state.seen | {key}
        awake = state.awake
    else:
        raise ProtocolError(f"unknown event {event!r}")

    was_decided = state.decision is not None
    while w.run_guards():
        pass
    new = EchoCCState(
        pid=state.pid,
        input=state.input,
        awake=awake,
        approved=frozenset(w.approved),
        counts=tuple(tuple(c) for c in w.counts),
        sent_echo=tuple(w.sent_echo),
        sent_level=tuple(w.sent),
        seen=seen,
        decision=w.decision,
    )
    everyone = tuple(range(spec.n))
    outgoing = tuple((everyone, Message(kind, value, state.pid)) for kind, value in w.out)
    decision = None if was_decided else w.decision
    return new, StepOutput(outgoing, decision)
