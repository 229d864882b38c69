from fractions import Fraction as F
from itertools import combinations, product

import pytest
from hypothesis import given, settings, strategies as st

from spidercc.adversaries import byz_equivocator, random_crash
from spidercc.reductions import (
    ApproxSpec,
    approx_decode,
    approx_outputs,
    centerless_adapt,
    centerless_decisions,
    centerless_spec,
)
from spidercc.simnet import run
from spidercc.spider import CENTER, CRASH, MALICIOUS, TaskSpec, Vertex, is_vertex
from spidercc.verify import check_agreement, check_validity

from oracles import bfs_distances, spider_graph


def test_adapt_examples():
    assert centerless_adapt(CENTER, 3) == Vertex(3, 1)
    assert centerless_adapt(Vertex(5, 2), 3) == Vertex(5, 2)
    assert centerless_adapt(Vertex(5, 1), 5) == Vertex(5, 1)


def test_decode_examples():
    quarter = ApproxSpec(F(1, 4))
    assert quarter.derived_R == 2
    assert approx_decode(CENTER, quarter) == F(1, 2)
    assert approx_decode(Vertex(1, 1), quarter) == F(3, 4)
    assert approx_decode(Vertex(0, 1), ApproxSpec(F(1, 2))) == 0
    assert [approx_decode(v, quarter) for v in (Vertex(0, 2), Vertex(0, 1), CENTER, Vertex(1, 1), Vertex(1, 2))] \
        == [0, F(1, 4), F(1, 2), F(3, 4), 1]


def test_decode_errors():
    with pytest.raises(ValueError):
        ApproxSpec(F(1, 5))
    with pytest.raises(ValueError):
        ApproxSpec(0)
    with pytest.raises(ValueError):
        approx_decode(Vertex(0, 1), ApproxSpec(F(1, 2)), value_count=3)
    with pytest.raises(ValueError):
        approx_decode(Vertex(0, 2), ApproxSpec(F(1, 2)))
    with pytest.raises(ValueError):
        approx_decode(Vertex(None, 1), ApproxSpec(F(1, 2)))
    t = run(TaskSpec(2, 1, 3, 1, CRASH), (0, 0, 1), random_crash(0), "crash_cc")
    with pytest.raises(ValueError):
        approx_outputs(t, ApproxSpec(F(1, 4)))


def centerless_ok(trace):
    spec = centerless_spec(trace.spec)
    adj = spider_graph(spec.value_count, spec.R, False)
    decisions = centerless_decisions(trace)
    assert all(is_vertex(d, spec) for d in decisions.values())
    for a, b in combinations(decisions.values(), 2):
        assert bfs_distances(adj, tuple(a))[tuple(b)] <= 1
    return check_validity(trace, decisions, spec).ok and check_agreement(trace, decisions, spec).ok


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2]), st.lists(st.integers(0, 2), min_size=5, max_size=5))
def test_centerless_over_crash_traces(seed, R, inputs):
    t = run(TaskSpec(3, R, 5, 2, CRASH), tuple(inputs), random_crash(seed), "crash_cc")
    assert centerless_ok(t)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["split", "flood", "random", "twofaced"]),
       st.lists(st.integers(0, 2), min_size=6, max_size=6))
def test_centerless_over_trim_traces(seed, strategy, inputs):
    t = run(TaskSpec(3, 2, 6, 1, MALICIOUS), tuple(inputs), byz_equivocator(seed, strategy), "trim_cc")
    assert centerless_ok(t)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2]), st.lists(st.integers(0, 2), min_size=4, max_size=4))
def test_centerless_over_echo_traces(seed, R, inputs):
    t = run(TaskSpec(3, R, 4, 1, MALICIOUS), tuple(inputs), byz_equivocator(seed, "twofaced"), "echo_cc")
    assert centerless_ok(t)


@pytest.mark.parametrize("inputs", list(product((0, 1), repeat=5)))
def test_approx_over_all_assignments(inputs):
    eps = ApproxSpec(F(1, 4))
    for seed in range(5):
        t = run(TaskSpec(2, eps.derived_R, 5, 2, CRASH), inputs, random_crash(seed), "crash_cc")
        out = approx_outputs(t, eps)
        assert all(0 <= x <= 1 for x in out.values())
        assert max(out.values()) - min(out.values()) <= eps.epsilon
        if len(set(inputs)) == 1:
            assert set(out.values()) == {inputs[0]}
