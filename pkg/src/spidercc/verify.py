"""Post-hoc property checks over execution traces."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional

from .protocols import get_protocol
from .simnet import ExecutionTrace, scaled_decision_time
from .spider import CRASH, TaskSpec, distance, is_vertex, minimal_subtree

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass(frozen=True)
class Verdict:
    prop: str
    result: str
    witness: str = ""

    def __post_init__(self):
        if self.result not in (PASS, FAIL, INCONCLUSIVE):
            raise ValueError(f"bad verdict result {self.result!r}")
        if self.result == FAIL and not self.witness:
            raise ValueError("a failing verdict needs a witness")

    @property
    def ok(self) -> bool:
        return self.result == PASS

    def line(self) -> str:
        return f"prop={self.prop} result={self.result} witness={self.witness or '-'}"


def _pass(prop: str, note: str = "") -> Verdict:
    return Verdict(prop, PASS, note)


def check_termination(trace: ExecutionTrace) -> Verdict:
    decided = Counter(r.proc for r in trace.records if r.decision is not None)
    for p in trace.correct:
        if decided[p] == 0:
            return Verdict("termination", FAIL, f"process {p} never decided")
        if decided[p] > 1:
            return Verdict("termination", FAIL, f"process {p} decided {decided[p]} times")
        d = trace.decisions[p][1]
        if not is_vertex(d, trace.spec):
            return Verdict("termination", FAIL, f"process {p} decided {d}, not a vertex")
    return _pass("termination")


def input_set(trace: ExecutionTrace) -> set:
    """Inputs that count for validity: everyone's under crash, correct ones otherwise."""
    procs = range(trace.spec.n) if trace.spec.failure_model == CRASH else trace.correct
    return {trace.inputs[p] for p in procs}


def check_validity(trace: ExecutionTrace, decisions: Optional[dict] = None,
                   spec: Optional[TaskSpec] = None) -> Verdict:
    spec = spec or trace.spec
    decisions = trace.correct_decisions() if decisions is None else decisions
    allowed = minimal_subtree(spec, input_set(trace))
    for p, d in sorted(decisions.items()):
        if d not in allowed:
            return Verdict("validity", FAIL,
                           f"process {p} decided {d} outside the subtree of inputs {sorted(input_set(trace))}")
    return _pass("validity")


def check_agreement(trace: ExecutionTrace, decisions: Optional[dict] = None,
                    spec: Optional[TaskSpec] = None) -> Verdict:
    spec = spec or trace.spec
    decisions = trace.correct_decisions() if decisions is None else decisions
    for (p, a), (q, b) in combinations(sorted(decisions.items()), 2):
        if distance(a, b, spec) > 1:
            return Verdict("agreement", FAIL, f"process {p} decided {a}, process {q} decided {b}")
    return _pass("agreement")


def branch_values(traces: Iterable[ExecutionTrace]) -> set:
    return {d.value for t in traces for d in t.correct_decisions().values() if d.value is not None}


def counting_oracle(protocol: str, inputs, n: int, f: int) -> Optional[set]:
    """Branches the inputs allow, for protocols whose branch is fixed by counting.

    Returns ``None`` for protocols without a counting oracle.
    """
    need = {"crash_cc": n - f, "oneround_crash": n - 2 * f}.get(protocol)
    if need is None:
        return None
    return {v for v, c in Counter(inputs).items() if c >= need}


def input_assignment(trace: ExecutionTrace) -> tuple:
    """The inputs binding may depend on.

    Under crash faults that is every input.  A malicious process has no
    meaningful input, so there it is the faulty set plus the correct inputs.
    """
    if trace.spec.failure_model == CRASH:
        return trace.inputs
    return tuple(None if p in trace.faulty else x for p, x in enumerate(trace.inputs))


def check_binding_oracle(traces) -> Verdict:
    """Necessary condition for binding over traces sharing one input assignment."""
    traces = list(traces)
    if not traces:
        return _pass("binding_oracle", "no traces")
    first = traces[0]
    key = input_assignment(first)
    if any(input_assignment(t) != key or t.protocol != first.protocol for t in traces):
        raise ValueError("binding oracle traces must share protocol and input assignment "
                         "(inputs, plus the faulty set under malicious faults)")
    if first.protocol == "echo_cc":
        raise ValueError("the echo cascade's branch is not fixed by its inputs; use the explorer")
    branches = branch_values(traces)
    if len(branches) > 1:
        return Verdict("binding_oracle", FAIL,
                       f"inputs {first.inputs} decided on branches {sorted(branches)}")
    spec = first.spec
    allowed = counting_oracle(first.protocol, first.inputs, spec.n, spec.f)
    if allowed is not None and not branches <= allowed:
        return Verdict("binding_oracle", FAIL,
                       f"branch {sorted(branches)} but the counting oracle allows {sorted(allowed)}")
    return _pass("binding_oracle", f"branches={sorted(branches)}")


def check_time_bound(trace: ExecutionTrace, bound=None) -> Verdict:
    if bound is None:
        bound = get_protocol(trace.protocol).time_bound(trace.spec.R)
    try:
        t = scaled_decision_time(trace)
    except ValueError as exc:
        return Verdict("time_bound", FAIL, str(exc))
    if t > Fraction(bound):
        return Verdict("time_bound", FAIL, f"scaled time {t} exceeds {bound}")
    return _pass("time_bound", f"scaled_time={t}")


def message_budget(trace: ExecutionTrace) -> int:
    spec = trace.spec
    per_process = get_protocol(trace.protocol).broadcast_budget(spec.R, spec.value_count)
    return len(trace.correct) * spec.n * per_process


def check_message_bound(trace: ExecutionTrace) -> Verdict:
    sent = sum(c for (correct, _), c in trace.counts.items() if correct)
    budget = message_budget(trace)
    if sent > budget:
        return Verdict("message_bound", FAIL, f"correct processes sent {sent} > {budget}")
    return _pass("message_bound", f"sent={sent} budget={budget}")


CHECKS = {
    "termination": check_termination,
    "validity": check_validity,
    "agreement": check_agreement,
    "time_bound": check_time_bound,
    "message_bound": check_message_bound,
}


def check_all(trace: ExecutionTrace, names: Optional[Iterable[str]] = None) -> list[Verdict]:
    names = list(CHECKS) if names is None else list(names)
    out = []
    for name in names:
        if name not in CHECKS:
            raise ValueError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
        out.append(CHECKS[name](trace))
    return out


def check_binding_implies_agreement(traces) -> Verdict:
    """For R = 1, a binding-oracle pass must come with agreement in every trace."""
    traces = list(traces)
    if not traces or traces[0].spec.R != 1:
        return _pass("binding_implies_agreement", "not applicable")
    if not check_binding_oracle(traces).ok:
        return _pass("binding_implies_agreement", "binding oracle failed; nothing implied")
    for t in traces:
        v = check_agreement(t)
        if not v.ok:
            return Verdict("binding_implies_agreement", FAIL, v.witness)
    return _pass("binding_implies_agreement")
