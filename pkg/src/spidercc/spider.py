"""Spider graphs: vertices, distances and minimal subtrees.

Values are dense integer ids ``0 .. value_count - 1``.  The distinguished
value ⊥ is represented by ``None``; the center vertex of a centered spider
is ``Vertex(None, 0)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

BOTTOM = None

CRASH = "crash"
MALICIOUS = "malicious"
FAILURE_MODELS = (CRASH, MALICIOUS)


class Vertex(NamedTuple):
    value: Optional[int]
    grade: int

    def __str__(self) -> str:
        return f"({'bot' if self.value is None else self.value},{self.grade})"


CENTER = Vertex(BOTTOM, 0)


@dataclass(frozen=True)
class TaskSpec:
    """One connected consensus instance."""

    value_count: int
    refinement: int
    n: int
    f: int
    failure_model: str = CRASH
    centered: bool = True

    def __post_init__(self) -> None:
        if self.value_count < 2:
            raise ValueError(f"value_count must be >= 2, got {self.value_count}")
        if self.refinement not in (1, 2):
            raise ValueError(f"refinement must be 1 or 2, got {self.refinement}")
        if self.n < 1 or self.f < 0 or self.f >= self.n:
            raise ValueError(f"need n >= 1 and 0 <= f < n, got n={self.n} f={self.f}")
        if self.failure_model not in FAILURE_MODELS:
            raise ValueError(f"unknown failure model {self.failure_model!r}")

    @property
    def R(self) -> int:
        return self.refinement

    @property
    def values(self) -> range:
        return range(self.value_count)


def is_vertex(d: object, spec: TaskSpec) -> bool:
    if not isinstance(d, tuple) or len(d) != 2:
        return False
    value, grade = d
    if not isinstance(grade, int):
        return False
    if value is None:
        return spec.centered and grade == 0
    return isinstance(value, int) and 0 <= value < spec.value_count and 1 <= grade <= spec.R


def _check(d: Vertex, spec: TaskSpec) -> None:
    if not is_vertex(d, spec):
        kind = "centered" if spec.centered else "centerless"
        raise ValueError(f"{d!r} is not a vertex of the {kind} spider with R={spec.R}")


def vertices(spec: TaskSpec) -> Iterator[Vertex]:
    """All vertices of the graph, center first, then branch by branch."""
    if spec.centered:
        yield CENTER
    for v in spec.values:
        for g in range(1, spec.R + 1):
            yield Vertex(v, g)


def neighbors(d: Vertex, spec: TaskSpec) -> list[Vertex]:
    _check(d, spec)
    value, grade = d
    if value is None:
        return [Vertex(v, 1) for v in spec.values]
    out = []
    if grade < spec.R:
        out.append(Vertex(value, grade + 1))
    if grade > 1:
        out.append(Vertex(value, grade - 1))
    elif spec.centered:
        out.append(CENTER)
    else:
        out.extend(Vertex(u, 1) for u in spec.values if u != value)
    return out


def distance(a: Vertex, b: Vertex, spec: TaskSpec) -> int:
    _check(a, spec)
    _check(b, spec)
    if a.value == b.value:
        return abs(a.grade - b.grade)
    if spec.centered:
        return a.grade + b.grade
    # centerless: walk down to the clique, cross one edge, walk up
    return a.grade + b.grade - 1


def minimal_subtree(spec: TaskSpec, leaves) -> frozenset[Vertex]:
    """Smallest connected vertex set containing the leaf ``(v, R)`` of each value."""
    leaves = set(leaves)
    if not leaves:
        raise ValueError("minimal_subtree needs at least one leaf value")
    for v in leaves:
        if not (isinstance(v, int) and 0 <= v < spec.value_count):
            raise ValueError(f"leaf value {v!r} outside 0..{spec.value_count - 1}")
    if len(leaves) == 1:
        (v,) = leaves
        return frozenset({Vertex(v, spec.R)})
    out = {Vertex(v, g) for v in leaves for g in range(1, spec.R + 1)}
    if spec.centered:
        out.add(CENTER)
    return frozenset(out)


def contains(subtree: frozenset[Vertex], d: Vertex) -> bool:
    return d in subtree


def branch_of(d: Vertex) -> Optional[int]:
    """Branch value of a decision, ``None`` for the center."""
    return d.value
