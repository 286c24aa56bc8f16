import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ydyn.errors import CapacityError, ConvergenceError, DomainError, EmptySolutionError
from ydyn.relation import (
    Relation,
    enumerate_weakly_invariant,
    format_relation,
    is_strongly_invariant,
    is_weakly_invariant,
    markov_measure,
    omega_limit,
    parse_relation,
    reach,
    recurrent_states,
    viable_core,
)

from conftest import A, B, C, sweep_relations
from oracles import bi_infinite_states, omega_by_matrix, reach_by_matrix, subsets, weakly_invariant_subsets

LOOP = Relation.from_edges(1, [(0, 0)])
BARE = Relation(1)
SOURCE = Relation.from_edges(2, [(0, 1), (1, 1)])


def test_oracle_on_r3(r3):
    # frozen from the walk-enumeration oracle
    assert bi_infinite_states(r3, {A, B, C}) == {A, B, C}
    assert bi_infinite_states(r3, {B, C}) == {C}


def test_viable_core_examples(r3):
    assert viable_core(r3, {A, B, C}) == {A, B, C}
    assert viable_core(r3, {B, C}) == {C}
    assert viable_core(r3, set()) == frozenset()


def test_weak_invariance_examples(r3):
    assert is_weakly_invariant(r3, {A, B})
    assert not is_weakly_invariant(r3, {B, C})
    assert is_weakly_invariant(r3, set())


def test_strong_invariance_examples(r3):
    assert is_strongly_invariant(r3, {A, B, C})
    assert not is_strongly_invariant(r3, {C})
    assert not is_strongly_invariant(r3, {A, B})


def test_enumerate_examples(r3):
    assert set(enumerate_weakly_invariant(r3)) == {frozenset(), frozenset({C}), frozenset({A, B}), frozenset({A, B, C})}
    assert enumerate_weakly_invariant(LOOP) == [frozenset(), frozenset({0})]
    assert enumerate_weakly_invariant(BARE) == [frozenset()]
    with pytest.raises(CapacityError):
        enumerate_weakly_invariant(Relation(21))


def test_reach_examples(r3):
    assert reach(r3, {A}, 1) == {B}
    assert reach(r3, {C}, -1) == {B, C}
    assert reach(r3, {A}, 0) == {A}
    assert reach(SOURCE, {0}, 0) == frozenset()


def test_omega_examples(r3):
    assert omega_limit(r3, A) == {A, B, C}
    assert omega_limit(r3, C) == {C}
    assert omega_limit(LOOP, 0) == {0}
    with pytest.raises(EmptySolutionError):
        omega_limit(SOURCE, 0)


def test_recurrent_examples(r3):
    assert recurrent_states(r3) == {A, B, C}
    assert recurrent_states(SOURCE) == {1}
    assert recurrent_states(Relation(4)) == frozenset()


def test_markov_examples(r3):
    mu = markov_measure(r3, {(A, B): 1, (B, A): 1})
    np.testing.assert_allclose(mu.weights, [0.5, 0.5, 0.0], atol=1e-12)
    mu = markov_measure(r3, {(A, B): 1, (B, A): 0.5, (B, C): 0.5, (C, C): 1})
    np.testing.assert_allclose(mu.weights, [0.0, 0.0, 1.0], atol=1e-12)
    assert list(markov_measure(LOOP, {(0, 0): 3.0}).weights) == [1.0]


def test_markov_errors(r3):
    with pytest.raises(DomainError):
        markov_measure(r3, {(A, C): 1})
    with pytest.raises(DomainError):
        markov_measure(SOURCE, {(0, 1): 1, (1, 1): 1})
    # mass would leak into c, which has no outgoing weight
    with pytest.raises(DomainError):
        markov_measure(r3, {(A, B): 1, (B, C): 1})


def test_power_iteration_on_periodic_chain_does_not_settle(monkeypatch):
    from ydyn import relation

    # period 2: everything feeds state 30, which spreads back over 0..29
    P = np.zeros((60, 60))
    P[:, 30] = 1.0
    P[30] = 0.0
    P[30, :30] = 1.0 / 30
    monkeypatch.setattr(relation, "POWER_MAX_ITER", 500)
    with pytest.raises(ConvergenceError):
        relation._class_stationary(P)


def test_large_chain_uses_power_iteration():
    n = 60
    edges = [(i, (i + 1) % n) for i in range(n)] + [(i, i) for i in range(n)]
    r = Relation.from_edges(n, edges)
    mu = markov_measure(r, {e: 1.0 for e in edges})
    np.testing.assert_allclose(mu.weights, np.full(n, 1 / n), atol=1e-9)


def test_text_format_roundtrip(r3):
    text = format_relation(r3)
    assert text == "states 3\n0 -> 1\n1 -> 0\n1 -> 2\n2 -> 2\n"
    assert parse_relation(text) == r3
    assert format_relation(parse_relation(text)) == text
    commented = "# R3\nstates 3\n0 -> 1  # a to b\n\n1 -> 0\n1 -> 2\n2 -> 2\n"
    assert parse_relation(commented) == r3
    with pytest.raises(DomainError):
        parse_relation("states 2\n0 -> 1\n0 -> 1\n")
    with pytest.raises(DomainError):
        parse_relation("0 -> 1\n")


SWEEP = sweep_relations(40, max_n=7)


@pytest.mark.parametrize("r", SWEEP, ids=lambda r: f"n{r.n}e{len(r.edges)}")
def test_against_oracles(r):
    assert set(enumerate_weakly_invariant(r)) == weakly_invariant_subsets(r)
    core = viable_core(r, range(r.n))
    assert core == bi_infinite_states(r, range(r.n))
    for e in subsets(r.n):
        for n in (-2, -1, 0, 1, 3):
            assert reach(r, e, n) == reach_by_matrix(r, e, n)
    for x in core:
        assert omega_limit(r, x) == omega_by_matrix(r, x)


@pytest.mark.parametrize("r", SWEEP, ids=lambda r: f"n{r.n}e{len(r.edges)}")
def test_kernel_identities(r):
    core = viable_core(r, range(r.n))
    for e in subsets(r.n):
        for s in range(3):
            for t in range(3):
                assert reach(r, e, s + t) == reach(r, reach(r, e, s), t)
        for t in (1, 2, 3):
            back = reach(r, e, -t)
            assert e & core <= reach(r, back, t)
            assert back == {x for x in core if reach(r, {x}, t) & e}
        if is_strongly_invariant(r, e):
            assert is_weakly_invariant(r, e)
    for x in core:
        assert is_weakly_invariant(r, omega_limit(r, x))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))))))
def test_viable_core_is_maximal_weakly_invariant(data):
    n, edges = data
    r = Relation(n, frozenset(edges))
    weak = weakly_invariant_subsets(r)
    for a in subsets(n):
        core = viable_core(r, a)
        assert core in weak
        assert core == frozenset().union(*[w for w in weak if w <= a])


def test_markov_reducible_chain_splits_by_absorption():
    # 0 is transient and drains evenly into the absorbing states 1 and 2;
    # the uniform start puts 1/3 on each, so each absorbing state ends with 1/3 + 1/6
    r = Relation.from_edges(3, [(0, 0), (0, 1), (0, 2), (1, 1), (2, 2), (1, 0)])
    mu = markov_measure(r, {(0, 1): 1, (0, 2): 1, (1, 1): 1, (2, 2): 1})
    assert list(mu.weights) == pytest.approx([0.0, 0.5, 0.5], abs=1e-15)
    assert mu.weights[0] == 0.0
