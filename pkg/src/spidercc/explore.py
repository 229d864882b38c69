"""Exhaustive binding check over bounded adversaries.

The explorer enumerates every interleaving of message deliveries (timing
is irrelevant to binding) together with every injection a faulty process
can make from a bounded menu: each kind of the protocol with each value of
V ∪ {⊥}, at most once per (sender, destination, kind[, value]).  Crash
faults are modelled by omission: a crash-faulty process runs the protocol
honestly, but any of its messages may stay undelivered forever.

A state is a tuple of local machine states plus the set of in-flight
messages and the set of faulty links already used.  For every state ``s``
reached right after the first correct decision the explorer computes the
set of non-⊥ branches decided by correct processes anywhere in the subtree
rooted at ``s``; binding holds iff that set never has two elements.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional

from .protocols import WAKEUP, Deliver, Kind, Message, get_protocol
from .spider import MALICIOUS, TaskSpec
from .verify import FAIL, INCONCLUSIVE, PASS, Verdict

if os.environ.get("SPIDERCC_PURE"):
    from . import _search_py as search
else:
    try:
        from . import _search as search
    except ImportError:  # built without a compiler
        from . import _search_py as search
ENGINE = "python" if search.__name__.endswith("_py") else "compiled"

DEFAULT_STATE_BUDGET = 10_000_000


@dataclass
class ExploreResult:
    verdict: Verdict
    states: int
    first_decision_states: int
    locked: dict = field(default_factory=dict)  # branch set -> number of prefixes
    seconds: float = 0.0

    @property
    def result(self) -> str:
        return self.verdict.result


def live_kinds(protocol, R: int) -> list:
    """Kinds whose delivery can influence a machine at refinement R."""
    kinds = set(protocol.kinds)
    if R == 1:
        kinds -= {Kind.BRANCH, Kind.ECHO4, Kind.ECHO5}
    return sorted(kinds)


def byz_menu(spec: TaskSpec, protocol, faulty, correct) -> tuple:
    """Every (dest, message) a malicious process may inject."""
    values = list(range(spec.value_count))
    out = []
    for s in sorted(faulty):
        for kind in live_kinds(protocol, spec.R):
            for v in values + ([] if kind is Kind.INPUT else [None]):
                for d in correct:
                    out.append((d, Message(kind, v, s)))
    return tuple(out)


class _Explorer:
    def __init__(self, spec, protocol, inputs, faulty, max_states):
        self.spec = spec
        self.proto = protocol
        self.step = protocol.step
        self.faulty = frozenset(faulty)
        self.malicious = self.faulty if spec.failure_model == MALICIOUS else frozenset()
        self.running = [p for p in range(spec.n) if p not in self.malicious]
        self.slot = {p: i for i, p in enumerate(self.running)}
        self.correct_slots = [self.slot[p] for p in self.running if p not in self.faulty]
        self.faulty_slots = [self.slot[p] for p in self.running if p in self.faulty]
        self.abstract = protocol.abstract
        self.inputs = tuple(inputs)
        self.max_states = max_states
        correct = [p for p in range(spec.n) if p not in self.faulty]
        self.menu = byz_menu(spec, protocol, self.malicious, correct)
        self.live = set(live_kinds(protocol, spec.R))
        self.menu_to = {d: [j for j, (dest, _) in enumerate(self.menu) if dest == d] for d in range(spec.n)}
        # position of each menu entry among the entries for its destination
        self.menu_rank = {}
        for d, js in self.menu_to.items():
            for r, j in enumerate(js):
                self.menu_rank[j] = r

    def _sends(self, output) -> list:
        out = []
        for dests, m in output.outgoing:
            if m.kind not in self.live:
                continue
            out.extend((d, m) for d in dests if d not in self.malicious)
        return out

    def initial(self):
        locals_ = []
        flight = set()
        for p in self.running:
            st, out = self.step(self.proto.init(p, self.inputs[p], self.spec), WAKEUP, self.spec)
            locals_.append(st)
            flight.update(self._sends(out))
        return (tuple(locals_), frozenset(flight), frozenset())

    def successors(self, state):
        locals_, flight, used = state
        for item in sorted(flight, key=_order):
            d, m = item
            yield item, self._deliver(locals_, flight - {item}, used, d, m)
        for i, item in enumerate(self.menu):
            if i not in used:
                d, m = item
                yield item, self._deliver(locals_, flight, used | {i}, d, m)

    def _deliver(self, locals_, flight, used, d, m):
        i = self.slot[d]
        st, out = self.step(locals_[i], Deliver(m), self.spec)
        if st is locals_[i] and not out.outgoing:
            return (locals_, flight, used)
        new_locals = locals_[:i] + (st,) + locals_[i + 1:]
        sends = self._sends(out)
        if sends:
            flight = flight | frozenset(sends)
        # A delivery that changes nothing now changes nothing later either
        # (dedup, closed rounds, absorbing decisions), so drop those messages.
        dead = [item for item in flight if item[0] == d and self._noop(st, item[1])]
        if dead:
            flight = flight - frozenset(dead)
        spent = [j for j in self.menu_to[d] if j not in used and self._noop(st, self.menu[j][1])]
        if spent:
            used = used | frozenset(spent)
        return (new_locals, flight, used)

    def _noop(self, st, m) -> bool:
        after, out = self.step(st, Deliver(m), self.spec)
        return after is st and not out.outgoing

    def key(self, state):
        """Canonical form of a state.

        Machines only count messages, so sender ids are dropped from the
        in-flight set, and processes in the same role are interchangeable
        once awake, so their bundles are sorted.
        """
        if self.abstract is None:
            return state
        locals_, flight, used = state
        inbox = [[] for _ in self.running]
        for d, m in flight:
            inbox[self.slot[d]].append((int(m.kind), -1 if m.value is None else m.value))
        spent = [[] for _ in self.running]
        for j in used:
            d, m = self.menu[j]
            spent[self.slot[d]].append(self.menu_rank[j])
        bundles = [(self.abstract(locals_[i]), tuple(sorted(inbox[i])), tuple(sorted(spent[i])))
                   for i in range(len(self.running))]
        return (tuple(sorted(bundles[i] for i in self.correct_slots)),
                tuple(sorted(bundles[i] for i in self.faulty_slots)))

    def decided(self, state) -> tuple:
        """(number of correct deciders, bitmask of their non-⊥ branches)."""
        count = 0
        mask = 0
        for i in self.correct_slots:
            d = state[0][i].decision
            if d is not None:
                count += 1
                if d.value is not None:
                    mask |= 1 << d.value
        return count, mask

    def run(self) -> ExploreResult:
        t0 = time.perf_counter()
        visited = set()  # states with no correct decision yet
        memo = {}  # decided states -> branch mask of their subtree
        locked = {}
        path = []

        def result(verdict):
            return ExploreResult(verdict, len(visited) + len(memo), sum(locked.values()),
                                 locked, time.perf_counter() - t0)

        root = self.initial()
        visited.add(self.key(root))
        frames = [_Frame(self.key(root), root, self.successors(root), 0, 0)]
        while frames:
            frame = frames[-1]
            pair = None if frame.saturated() else next(frame.it, None)
            if pair is None:
                frames.pop()
                if frame.count:
                    memo[frame.key] = frame.mask
                    if frames and frames[-1].count:
                        frames[-1].mask |= frame.mask
                    if frame.count == 1:
                        branches = _branch_set(frame.mask)
                        locked[branches] = locked.get(branches, 0) + 1
                        if len(branches) > 1:
                            return result(Verdict("binding", FAIL, (
                                f"after {len(path)} deliveries {_fmt_path(path)} the first decision "
                                f"still allows branches {list(branches)}")))
                if path:
                    path.pop()
                continue
            action, nxt = pair
            count, mask = self.decided(nxt)
            k = self.key(nxt)
            if count == 0:
                if k in visited:
                    continue
                visited.add(k)
            else:
                known = memo.get(k)
                if known is not None:
                    frame.mask |= known
                    continue
            if len(visited) + len(memo) >= self.max_states:
                return result(Verdict("binding", INCONCLUSIVE,
                                      f"state budget {self.max_states} exhausted"))
            path.append(action)
            frames.append(_Frame(k, nxt, self.successors(nxt), mask, count))
        return result(Verdict("binding", PASS, f"states={len(visited) + len(memo)}"))


class _Frame:
    __slots__ = ("key", "state", "it", "mask", "count")

    def __init__(self, key, state, it, mask, count):
        self.key = key
        self.state = state
        self.it = it
        self.mask = mask
        self.count = count

    def saturated(self) -> bool:
        # two branches already reachable: the verdict for every ancestor is settled
        return self.count > 0 and self.mask & (self.mask - 1) != 0


def _order(item):
    d, m = item
    return (d, m.sender, int(m.kind), -1 if m.value is None else m.value)


def _branch_set(mask: int) -> tuple:
    return tuple(v for v in range(mask.bit_length()) if mask >> v & 1)


def _fmt_path(path) -> str:
    shown = [f"{m.kind.name}({'bot' if m.value is None else m.value}) {m.sender}->{d}" for d, m in path[:12]]
    return "[" + ", ".join(shown) + (", ..." if len(path) > 12 else "") + "]"


def binding_explorer(spec: TaskSpec, inputs, protocol: str, faulty: Iterable[int] = (),
                     max_states: int = DEFAULT_STATE_BUDGET) -> ExploreResult:
    """Explore one fixed faulty set exhaustively."""
    proto = get_protocol(protocol)
    faulty = frozenset(faulty)
    if len(faulty) > spec.f:
        raise ValueError(f"{len(faulty)} faulty processes exceed f={spec.f}")
    if len(inputs) != spec.n:
        raise ValueError(f"expected {spec.n} inputs, got {len(inputs)}")
    if protocol == "echo_cc" and spec.failure_model == MALICIOUS and _compact_fits(spec, faulty):
        return _explore_compact(spec, inputs, faulty, max_states)
    return _Explorer(spec, proto, inputs, faulty, max_states).run()


def _compact_fits(spec, faulty) -> bool:
    return spec.n - len(faulty) <= 6 and len(faulty) <= 2 and spec.value_count <= 4 and spec.R in (1, 2)


def _burst_text(burst, correct, k) -> str:
    tc, tm = burst
    names = ["ECHO", "ECHO2", "ECHO3", "ECHO4", "ECHO5"]
    parts = []
    for cell, (c, m) in enumerate(zip(tc, tm)):
        kind = names[cell // (k + 1)]
        v = cell % (k + 1)
        label = f"{kind}({'bot' if v == k else v})"
        if c:
            parts.append(f"{c}x{label}")
        for s in range(8):
            if m >> s & 1:
                parts.append(f"{label} from faulty#{s}")
    return "+".join(parts)


def _explore_compact(spec, inputs, faulty, max_states) -> ExploreResult:
    """The echo cascade on the compact engine (compiled when available)."""
    t0 = time.perf_counter()
    correct = [p for p in range(spec.n) if p not in faulty]
    k = spec.value_count
    status, states, locked_masks, path = search.explore_echo(
        spec.n, spec.f, k, spec.R, [inputs[p] for p in correct], len(faulty), max_states)
    locked = {}
    for mask, c in locked_masks.items():
        b = _branch_set(mask)
        locked[b] = locked.get(b, 0) + c
    if status == search.PASS:
        verdict = Verdict("binding", PASS, f"states={states}")
    elif status == search.INCONCLUSIVE:
        verdict = Verdict("binding", INCONCLUSIVE, f"state budget {max_states} exhausted")
    else:
        steps = [f"p{correct[pid]}<-{_burst_text(b, correct, k)}" for pid, b in path]
        shown = ", ".join(steps[:12]) + (", ..." if len(steps) > 12 else "")
        bad = [b for b in locked if len(b) > 1]
        verdict = Verdict("binding", FAIL, (f"after {len(steps)} delivery bursts [{shown}] the first "
                                            f"decision still allows branches {list(bad[0]) if bad else '?'}"))
    return ExploreResult(verdict, states, sum(locked.values()), locked, time.perf_counter() - t0)


def faulty_sets(n: int, f: int, exact: bool = False):
    sizes = [f] if exact else range(f + 1)
    for k in sizes:
        yield from (frozenset(c) for c in combinations(range(n), k))
