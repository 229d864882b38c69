"""Centerless connected consensus and ε-approximate agreement on top of the centered protocols."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .spider import CENTER, TaskSpec, Vertex


def centerless_adapt(decision: Vertex, own_input: int) -> Vertex:
    """Replace the center by the caller's own input at grade 1."""
    if decision == CENTER:
        return Vertex(own_input, 1)
    return decision


def centerless_spec(spec: TaskSpec) -> TaskSpec:
    return replace(spec, centered=False)


def centerless_decisions(trace) -> dict:
    return {p: centerless_adapt(d, trace.inputs[p]) for p, d in trace.correct_decisions().items()}


@dataclass(frozen=True)
class ApproxSpec:
    epsilon: Fraction

    def __post_init__(self):
        eps = Fraction(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if not 0 < eps <= Fraction(1, 2):
            raise ValueError(f"epsilon must lie in (0, 1/2], got {eps}")
        if self.derived_R > 2:
            raise ValueError(f"epsilon={eps} needs R={self.derived_R}; only R <= 2 is implemented")

    @property
    def derived_R(self) -> int:
        return math.ceil(1 / (2 * self.epsilon))


def approx_decode(decision: Vertex, spec: ApproxSpec, value_count: int = 2) -> Fraction:
    """Position of a decision on the chain (0,R) .. (⊥,0) .. (1,R), scaled to [0, 1]."""
    if value_count != 2:
        raise ValueError(f"approximate agreement needs V = {{0, 1}}, got |V| = {value_count}")
    R = spec.derived_R
    value, grade = decision
    if value is None:
        if grade != 0:
            raise ValueError(f"{decision} is not on the chain")
        step = R
    elif value in (0, 1) and 1 <= grade <= R:
        step = R - grade if value == 0 else R + grade
    else:
        raise ValueError(f"{decision} is not on the chain for R={R}")
    return Fraction(step, 2 * R)


def approx_outputs(trace, spec: ApproxSpec) -> dict:
    if trace.spec.R != spec.derived_R:
        raise ValueError(f"trace has R={trace.spec.R}, epsilon={spec.epsilon} needs R={spec.derived_R}")
    return {p: approx_decode(d, spec, trace.spec.value_count) for p, d in trace.correct_decisions().items()}
