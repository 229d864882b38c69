"""Adversary policies: fault choice, delays, crash cuts, Byzantine messages.

A policy is stateful for the duration of one run and reseeds itself in
``setup``, so reusing one object for several runs replays identically.
"""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .protocols import WAKEUP, Deliver, Kind, Message
from .simnet import CrashCut, Injection

DEFAULT_DELAYS = (Fraction(1, 4), Fraction(1, 2), Fraction(1))

# position of each kind in the protocol's message cascade
_LEVEL = {Kind.INPUT: 0, Kind.BRANCH: 1, Kind.ECHO: 0, Kind.ECHO2: 1,
          Kind.ECHO3: 2, Kind.ECHO4: 3, Kind.ECHO5: 4}


class Adversary:
    """Failure-free policy with a fixed delay; base class for the others."""

    name = "none"

    def __init__(self, seed: int = 0, delays: Sequence = (1,)):
        self.seed = seed
        self.delays = tuple(Fraction(d) for d in delays)
        if not self.delays or min(self.delays) <= 0:
            raise ValueError("delays must be a non-empty set of positive rationals")

    def setup(self, spec, protocol, inputs) -> frozenset:
        self.spec = spec
        self.protocol = protocol
        self.inputs = tuple(inputs)
        self.rng = random.Random(self.seed)
        self.faulty = self.choose_faulty()
        return self.faulty

    def choose_faulty(self) -> frozenset:
        return frozenset()

    def start(self) -> Iterable[Injection]:
        return ()

    def delay(self, now, message: Message, dest: int) -> Fraction:
        if len(self.delays) == 1:
            return self.delays[0]
        return self.rng.choice(self.delays)

    def crash_cut(self, pid: int) -> Optional[CrashCut]:
        return None

    def observe(self, now, pid, item, sends, decision) -> Iterable[Injection]:
        return ()

    @property
    def max_delay(self) -> Fraction:
        return max(self.delays)

    def _correct(self) -> list[int]:
        return [p for p in range(self.spec.n) if p not in self.faulty]

    def _values(self, kind: Kind) -> list:
        vals = list(range(self.spec.value_count))
        return vals if kind is Kind.INPUT else vals + [None]


def failure_free(delay=1) -> Adversary:
    return Adversary(0, (delay,))


class SilentFaulty(Adversary):
    """The last f processes are faulty and never send anything.

    Under the crash model they crash before their first broadcast.
    """

    name = "silent"

    def choose_faulty(self):
        return frozenset(range(self.spec.n - self.spec.f, self.spec.n))

    def crash_cut(self, pid):
        return CrashCut(0, frozenset())


class RandomCrash(Adversary):
    """Up to f crashes at random cut points with i.i.d. delays."""

    name = "random_crash"

    def __init__(self, seed: int = 0, crash_prob: float = 0.5, delays: Sequence = DEFAULT_DELAYS):
        super().__init__(seed, delays)
        if not 0 <= crash_prob <= 1:
            raise ValueError(f"crash_prob must lie in [0, 1], got {crash_prob}")
        self.crash_prob = crash_prob

    def choose_faulty(self):
        self.candidates = frozenset(self.rng.sample(range(self.spec.n), self.spec.f))
        return frozenset(p for p in sorted(self.candidates) if self.rng.random() < self.crash_prob)

    def crash_cut(self, pid):
        last = self.protocol.broadcast_budget(self.spec.R, self.spec.value_count)
        reached = frozenset(d for d in range(self.spec.n) if self.rng.random() < 0.5)
        return CrashCut(self.rng.randrange(last), reached)


def random_crash(seed: int, crash_prob: float = 0.5, delay_range: Sequence = DEFAULT_DELAYS) -> RandomCrash:
    return RandomCrash(seed, crash_prob, delay_range)


BYZ_STRATEGIES = ("silent", "split", "flood", "random", "twofaced")


class ByzEquivocator(Adversary):
    """Malicious faulty processes that equivocate.

    Strategies:

    ``silent``
        faulty processes send nothing.
    ``split``
        every faulty process sends each message kind with value ``split[0]``
        to the first half of the correct processes and ``split[1]`` to the
        rest.
    ``flood``
        every faulty process sends every kind with every value to everyone;
        the receivers' dedup keeps at most one per kind (one per value for
        ECHO).
    ``random``
        adaptive: after each correct step a faulty process may send a random
        kind and value to a random subset, at a random delay.
    ``twofaced``
        each faulty process runs two honest copies of the protocol with
        different inputs and shows one copy to each half of the correct
        processes.
    """

    name = "byz"

    def __init__(self, seed: int = 0, strategy: str = "random", delays: Sequence = DEFAULT_DELAYS,
                 split: tuple = (0, 1), inject_prob: float = 0.3, faulty: Optional[Iterable[int]] = None):
        super().__init__(seed, delays)
        if strategy not in BYZ_STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}; choose from {', '.join(BYZ_STRATEGIES)}")
        self.strategy = strategy
        self.split = tuple(split)
        self.inject_prob = inject_prob
        self.fixed_faulty = None if faulty is None else frozenset(faulty)

    def choose_faulty(self):
        if self.fixed_faulty is not None:
            return self.fixed_faulty
        return frozenset(self.rng.sample(range(self.spec.n), self.spec.f))

    def _halves(self):
        correct = self._correct()
        mid = (len(correct) + 1) // 2
        return correct[:mid], correct[mid:]

    def _when(self, kind: Kind, base=Fraction(0)) -> Fraction:
        return base + _LEVEL[kind] + self.rng.choice(self.delays)

    def start(self):
        kinds = sorted(self.protocol.kinds)
        out = []
        if self.strategy == "split":
            first, second = self._halves()
            for s in sorted(self.faulty):
                for kind in kinds:
                    for group, v in ((first, self.split[0]), (second, self.split[1])):
                        if kind is Kind.INPUT and v is None:
                            continue
                        out.extend(Injection(self._when(kind), d, Message(kind, v, s)) for d in group)
        elif self.strategy == "flood":
            for s in sorted(self.faulty):
                for d in self._correct():
                    for kind in kinds:
                        values = self._values(kind)
                        self.rng.shuffle(values)
                        out.extend(Injection(self._when(kind), d, Message(kind, v, s)) for v in values)
        elif self.strategy == "random":
            out.extend(self._random_burst(Fraction(0)))
        elif self.strategy == "twofaced":
            out.extend(self._twofaced_start())
        return out

    def _random_burst(self, now):
        out = []
        kinds = sorted(self.protocol.kinds)
        for s in sorted(self.faulty):
            if self.rng.random() >= self.inject_prob:
                continue
            kind = self.rng.choice(kinds)
            v = self.rng.choice(self._values(kind))
            for d in self._correct():
                if self.rng.random() < 0.5:
                    out.append(Injection(now + self.rng.choice(self.delays), d, Message(kind, v, s)))
        return out

    def _twofaced_start(self):
        k = self.spec.value_count
        first, second = self._halves()
        self.shadows = {}
        out = []
        for s in sorted(self.faulty):
            a, b = self.rng.randrange(k), self.rng.randrange(k)
            faces = []
            for group, value in ((first, a), (second, b)):
                state = self.protocol.init(s, value, self.spec)
                faces.append([state, group])
            self.shadows[s] = faces
            for face in faces:
                out.extend(self._shadow_step(s, face, WAKEUP, Fraction(0)))
        return out

    def _shadow_step(self, s, face, event, now):
        state, group = face
        state, output = self.protocol.step(state, event, self.spec)
        face[0] = state
        out = []
        for _dests, message in output.outgoing:
            for d in group:
                out.append(Injection(now + self.rng.choice(self.delays), d, message))
        return out

    def observe(self, now, pid, item, sends, decision):
        if self.strategy == "random":
            return self._random_burst(now)
        if self.strategy == "twofaced":
            out = []
            for dest, message in sends:
                for face in self.shadows.get(dest, ()):
                    out.extend(self._shadow_step(dest, face, Deliver(message), now))
            return out
        return ()


def byz_equivocator(seed: int, strategy: str = "random", **kwargs) -> ByzEquivocator:
    return ByzEquivocator(seed, strategy, **kwargs)


class LateCascadeScript(Adversary):
    """Scripted schedule that delays the echo cascade to just before time 5.

    Processes are laid out as ``A`` (f-1 correct, input 0), ``p`` (input 0),
    ``B`` (f correct, input 0), ``q`` (input 1) and ``F`` (f faulty).  The
    faulty processes show ECHO(1) only to ``B`` (at 2-eps) and to ``p`` (at
    2-eps/4), B's ECHO(1) reaches ``p`` early, and ``p``'s own ECHO(1) is
    timed to land with B's at 3-eps.  All other messages take one unit.
    With R = 2 the same script pushes the last decision towards 7.
    """

    name = "late_cascade"

    def __init__(self, epsilon, f: int):
        super().__init__(0, (1,))
        self.epsilon = Fraction(epsilon)
        if not 0 < self.epsilon <= Fraction(1, 2):
            raise ValueError(f"epsilon must lie in (0, 1/2], got {epsilon}")
        if f < 2:
            raise ValueError(f"the scenario needs f >= 2, got {f}")
        self.f = f
        self.A = tuple(range(f - 1))
        self.p = f - 1
        self.B = tuple(range(f, 2 * f))
        self.q = 2 * f
        self.F = tuple(range(2 * f + 1, 3 * f + 1))

    @property
    def script_inputs(self) -> tuple:
        return tuple(1 if i == self.q else 0 for i in range(3 * self.f + 1))

    def setup(self, spec, protocol, inputs):
        if spec.n != 3 * self.f + 1 or spec.f != self.f:
            raise ValueError(f"the scenario needs n = 3f+1 = {3 * self.f + 1} and f = {self.f}")
        if protocol.name != "echo_cc" or spec.value_count != 2:
            raise ValueError("the scenario is defined for the echo cascade with V = {0, 1}")
        expected = self.script_inputs
        if any(inputs[i] != expected[i] for i in range(spec.n) if i not in self.F):
            raise ValueError(f"the scenario needs correct inputs {expected[:2 * self.f + 1]}")
        super().setup(spec, protocol, inputs)
        return self.faulty

    def choose_faulty(self):
        return frozenset(self.F)

    def start(self):
        eps = self.epsilon
        out = []
        for s in self.F:
            for b in self.B:
                out.append(Injection(2 - eps, b, Message(Kind.ECHO, 1, s)))
            out.append(Injection(2 - eps / 4, self.p, Message(Kind.ECHO, 1, s)))
        return out

    def delay(self, now, message, dest):
        if message.kind is Kind.ECHO and message.value == 1:
            if message.sender in self.B and dest == self.p:
                return self.epsilon / 2
            if message.sender == self.p:
                return 1 - self.epsilon / 2
        return Fraction(1)


def late_cascade_script(epsilon, f: int) -> LateCascadeScript:
    return LateCascadeScript(epsilon, f)
