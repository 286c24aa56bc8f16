import numpy as np
import pytest

from ydyn.relation import Relation

A, B, C = 0, 1, 2


@pytest.fixture
def r3():
    """States a, b, c with a->b, b->a, b->c, c->c."""
    return Relation.from_edges(3, [(A, B), (B, A), (B, C), (C, C)])


def sweep_relations(count=100, max_n=8, seed=20240611):
    rng = np.random.default_rng(seed)
    from ydyn.relation import random_relation

    return [random_relation(rng, int(rng.integers(1, max_n + 1))) for _ in range(count)]


def core_markov(r, rng):
    """Stationary measure from random positive weights on every edge inside the viable core."""
    from ydyn.relation import markov_measure

    core = r.core()
    edges = [(i, j) for i, j in sorted(r.edges) if i in core and j in core]
    return markov_measure(r, {e: float(rng.uniform(0.1, 1.0)) for e in edges})


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[k])
