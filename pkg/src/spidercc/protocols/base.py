from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

from ..spider import Vertex


class Kind(enum.IntEnum):
    INPUT = 0
    BRANCH = 1
    ECHO = 2
    ECHO2 = 3
    ECHO3 = 4
    ECHO4 = 5
    ECHO5 = 6


class Message(NamedTuple):
    kind: Kind
    value: Optional[int]
    sender: int

    def dedup_key(self) -> tuple:
        # a correct process sends at most one ECHO per value, one of anything else
        if self.kind is Kind.ECHO:
            return (self.sender, self.kind, self.value)
        return (self.sender, self.kind)


@dataclass(frozen=True)
class Wakeup:
    def __repr__(self) -> str:
        return "WAKEUP"


WAKEUP = Wakeup()


@dataclass(frozen=True)
class Deliver:
    message: Message


Event = Union[Wakeup, Deliver]


@dataclass(frozen=True)
class StepOutput:
    """Messages to send and the decision taken by one step.

    ``outgoing`` holds ``(destinations, message)`` pairs, ``destinations``
    being a tuple of process ids.
    """

    outgoing: tuple = ()
    decision: Optional[Vertex] = None


NO_OUTPUT = StepOutput()


class ProtocolError(Exception):
    """A machine received an event its algorithm never produces."""


def value_ok(value, spec) -> bool:
    return value is None or (isinstance(value, int) and 0 <= value < spec.value_count)


@dataclass(frozen=True)
class ProtocolInfo:
    name: str
    failure_model: str
    kinds: frozenset
    init: Callable
    step: Callable
    abstract: Callable = None
    refinements: tuple = (1, 2)
    min_n: Callable[[int], int] = field(default=lambda f: 2 * f + 1)

    def resilient(self, n: int, f: int) -> bool:
        return n >= self.min_n(f)

    def time_bound(self, R: int) -> int:
        if self.name in ("oneround_crash", "oneround_byz"):
            return 1
        if self.name == "echo_cc":
            return 5 if R == 1 else 7
        return R

    def broadcast_budget(self, R: int, value_count: int) -> int:
        """Broadcasts a correct process may make."""
        if self.name == "echo_cc":
            return value_count + 5
        return R
