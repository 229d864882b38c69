"""Deterministic discrete-event network simulator with exact rational time.

The adversary object decides delays, crash cuts and Byzantine injections;
the simulator enforces the execution rules (wakeup first, eventual
delivery of correct messages, at most f faults, per-link dedup of faulty
messages) and records a totally ordered trace.

Simultaneous events are processed in ``(time, phase, destination, sender,
kind, value)`` order, wakeups (phase 0) before deliveries (phase 1).
"""
from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

from .protocols import WAKEUP, Deliver, Kind, Message, ProtocolInfo, get_protocol
from .spider import CRASH, MALICIOUS, TaskSpec, Vertex


class SimulationError(Exception):
    """The adversary broke an execution rule."""


class LivenessViolation(SimulationError):
    """The event budget ran out before the run quiesced."""

    def __init__(self, message: str, trace: "ExecutionTrace"):
        super().__init__(message)
        self.trace = trace


class Injection(NamedTuple):
    """A message from a malicious process, delivered at ``time``."""

    time: Fraction
    dest: int
    message: Message


class CrashCut(NamedTuple):
    """Crash during broadcast number ``broadcast`` (0-based).

    Earlier broadcasts reach everyone, broadcast ``broadcast`` reaches only
    ``reached``, and the process takes no further steps afterwards.
    """

    broadcast: int
    reached: frozenset


@dataclass(frozen=True)
class TraceRecord:
    time: Fraction
    proc: int
    event: object  # WAKEUP or Message
    sends: tuple = ()  # (dest, Message) pairs
    decision: Optional[Vertex] = None
    send_time: Optional[Fraction] = None

    @property
    def is_wakeup(self) -> bool:
        return not isinstance(self.event, Message)


@dataclass
class ExecutionTrace:
    spec: TaskSpec
    protocol: str
    inputs: tuple
    faulty: frozenset
    records: list = field(default_factory=list)
    # pid -> (time, vertex), first decision of every process that decided
    decisions: dict = field(default_factory=dict)
    # (sender_correct, kind name) -> point-to-point messages sent
    counts: Counter = field(default_factory=Counter)

    @property
    def correct(self) -> list[int]:
        return [p for p in range(self.spec.n) if p not in self.faulty]

    def correct_decisions(self) -> dict:
        return {p: d for p, (_, d) in self.decisions.items() if p not in self.faulty}

    def last_correct_decision_time(self) -> Optional[Fraction]:
        times = [self.decisions[p][0] for p in self.correct if p in self.decisions]
        if len(times) < len(self.correct):
            return None
        return max(times, default=Fraction(0))

    def max_correct_delay(self, until: Optional[Fraction] = None) -> Fraction:
        """Largest correct-to-correct delay within the prefix ending at ``until``.

        A message sent inside the prefix but delivered after it counts with
        the time it has already spent in flight, ``until - send_time``.
        """
        best = Fraction(0)
        for r in self.records:
            if r.is_wakeup or r.proc in self.faulty or r.event.sender in self.faulty:
                continue
            if until is not None and r.time > until:
                if r.send_time <= until:
                    best = max(best, until - r.send_time)
                continue
            best = max(best, r.time - r.send_time)
        return best

    def lines(self) -> list[str]:
        return [format_record(r) for r in self.records]


def _fmt_value(v) -> str:
    return "bot" if v is None else str(v)


def _fmt_time(t: Fraction) -> str:
    return f"t={t.numerator}/{t.denominator}"


def format_record(r: TraceRecord) -> str:
    if r.is_wakeup:
        ev = "ev=WAKEUP"
    else:
        m = r.event
        ev = f"ev=DELIVER {m.kind.name} {_fmt_value(m.value)} {m.sender}"
    parts = [_fmt_time(r.time), f"proc={r.proc}", ev]
    for dest, m in r.sends:
        parts.append(f"send {dest} {m.kind.name} {_fmt_value(m.value)}")
    if r.decision is not None:
        parts.append(f"decide {_fmt_value(r.decision.value)} {r.decision.grade}")
    return " ".join(parts)


def default_event_budget(spec: TaskSpec) -> int:
    """Deliveries allowed per process before a run is declared non-live."""
    return 10 * spec.n * (spec.value_count + 6)


def run(
    spec: TaskSpec,
    inputs,
    adversary,
    protocol="crash_cc",
    *,
    event_budget: Optional[int] = None,
) -> ExecutionTrace:
    """Run one execution to quiescence and return its trace."""
    proto: ProtocolInfo = protocol if isinstance(protocol, ProtocolInfo) else get_protocol(protocol)
    inputs = tuple(inputs)
    if len(inputs) != spec.n:
        raise ValueError(f"expected {spec.n} inputs, got {len(inputs)}")
    if spec.R not in proto.refinements:
        raise ValueError(f"{proto.name} does not support R={spec.R}")
    if proto.failure_model != spec.failure_model:
        raise ValueError(f"{proto.name} is a {proto.failure_model} protocol, spec says {spec.failure_model}")

    faulty = frozenset(adversary.setup(spec, proto, inputs))
    if len(faulty) > spec.f:
        raise SimulationError(f"adversary named {len(faulty)} faulty processes, budget is f={spec.f}")
    if not faulty <= set(range(spec.n)):
        raise SimulationError(f"faulty set {sorted(faulty)} names unknown processes")

    malicious = faulty if spec.failure_model == MALICIOUS else frozenset()
    cuts = {p: adversary.crash_cut(p) for p in faulty} if spec.failure_model == CRASH else {}
    budget = (event_budget if event_budget is not None else default_event_budget(spec)) * spec.n

    trace = ExecutionTrace(spec, proto.name, inputs, faulty)
    states = {p: proto.init(p, inputs[p], spec) for p in range(spec.n) if p not in malicious}
    broadcasts = Counter()
    crashed: set[int] = set()
    injected: set[tuple] = set()
    queue: list = []
    seq = itertools.count()
    vkey = spec.value_count

    def push(time, dest, send_time, message):
        key = (time, 1, dest, message.sender, int(message.kind),
               vkey if message.value is None else message.value, next(seq))
        heapq.heappush(queue, key + (send_time, message))

    def inject(now, items):
        for inj in items:
            m = inj.message
            if m.sender not in malicious:
                raise SimulationError(f"process {m.sender} is not malicious but an injection names it")
            if inj.time < now:
                raise SimulationError(f"injection at {inj.time} is in the past (now {now})")
            if not 0 <= inj.dest < spec.n:
                raise SimulationError(f"injection to unknown process {inj.dest}")
            link = (inj.dest,) + m.dedup_key()
            if link in injected:
                continue  # clipped: the receiver would drop it anyway
            injected.add(link)
            trace.counts[(False, m.kind.name)] += 1
            if inj.dest not in malicious:
                push(Fraction(inj.time), inj.dest, Fraction(inj.time), m)

    def emit(now, pid, output) -> tuple:
        sends = []
        for dests, message in output.outgoing:
            idx = broadcasts[pid]
            broadcasts[pid] += 1
            cut = cuts.get(pid)
            if cut is not None:
                if idx > cut.broadcast:
                    continue
                if idx == cut.broadcast:
                    dests = [d for d in dests if d in cut.reached]
                    crashed.add(pid)
            for dest in dests:
                sends.append((dest, message))
                trace.counts[(pid not in faulty, message.kind.name)] += 1
                if dest in malicious:
                    continue
                delay = adversary.delay(now, message, dest)
                if delay is None:
                    raise SimulationError(f"adversary dropped {message} to {dest}")
                delay = Fraction(delay)
                if delay <= 0:
                    raise SimulationError(f"delay must be positive, got {delay}")
                push(now + delay, dest, now, message)
        return tuple(sends)

    for p in sorted(states):
        heapq.heappush(queue, (Fraction(0), 0, p, -1, -1, -1, next(seq), None, WAKEUP))
    inject(Fraction(0), adversary.start())

    processed = 0
    while queue:
        time, _, dest, *_rest, send_time, item = heapq.heappop(queue)
        processed += 1
        if processed > budget:
            raise LivenessViolation(f"event budget of {budget} exhausted at t={time}", trace)
        if dest in crashed:
            continue
        event = WAKEUP if item is WAKEUP else Deliver(item)
        state, output = proto.step(states[dest], event, spec)
        states[dest] = state
        sends = emit(time, dest, output)
        if output.decision is not None and dest not in trace.decisions:
            trace.decisions[dest] = (time, output.decision)
        trace.records.append(TraceRecord(time, dest, item, sends, output.decision, send_time))
        inject(time, adversary.observe(time, dest, item, sends, output.decision))
    return trace


def scaled_decision_time(trace: ExecutionTrace) -> Fraction:
    """Last correct decision time over the largest correct delay before it.

    Wakeups all happen at time 0, so no wakeup offset is subtracted.
    """
    last = trace.last_correct_decision_time()
    if last is None:
        undecided = [p for p in trace.correct if p not in trace.decisions]
        raise ValueError(f"correct processes {undecided} never decided")
    longest = trace.max_correct_delay(until=last)
    if longest == 0:
        return Fraction(0)
    return last / longest


def message_totals(trace: ExecutionTrace) -> dict:
    """Point-to-point message counts.

    Returns ``{"correct": {kind: count}, "faulty": {...}, "correct_total": int,
    "faulty_total": int}`` over every kind of the protocol family.
    """
    out = {"correct": {}, "faulty": {}}
    for k in Kind:
        out["correct"][k.name] = trace.counts.get((True, k.name), 0)
        out["faulty"][k.name] = trace.counts.get((False, k.name), 0)
    out["correct_total"] = sum(out["correct"].values())
    out["faulty_total"] = sum(out["faulty"].values())
    return out


def check_model(trace: ExecutionTrace) -> list[str]:
    """Problems with the trace as an execution of the model; empty when conformant."""
    problems = []
    last = Fraction(0)
    wakeups = Counter()
    seen_proc = set()
    sent = Counter()
    delivered = Counter()
    for i, r in enumerate(trace.records):
        if r.time < last:
            problems.append(f"record {i}: time {r.time} goes backwards")
        last = r.time
        if r.is_wakeup:
            wakeups[r.proc] += 1
            if r.time != 0:
                problems.append(f"record {i}: wakeup of {r.proc} at {r.time}, not 0")
        elif r.proc not in seen_proc:
            problems.append(f"record {i}: process {r.proc} receives before waking up")
        seen_proc.add(r.proc)
        if not r.is_wakeup and r.event.sender not in trace.faulty and r.proc not in trace.faulty:
            delivered[(r.event.sender, r.proc, r.event.kind, r.event.value)] += 1
        if r.proc not in trace.faulty:
            for dest, m in r.sends:
                if dest not in trace.faulty:
                    sent[(m.sender, dest, m.kind, m.value)] += 1
    for p in trace.correct:
        if wakeups[p] != 1:
            problems.append(f"correct process {p} woke up {wakeups[p]} times")
    if sent != delivered:
        missing = sent - delivered
        extra = delivered - sent
        if missing:
            problems.append(f"correct messages never delivered: {list(missing)[:5]}")
        if extra:
            problems.append(f"deliveries that were never sent: {list(extra)[:5]}")
    dupes = [k for k, c in sent.items() if c > 1]
    if dupes:
        problems.append(f"correct processes sent duplicates: {dupes[:5]}")
    return problems
