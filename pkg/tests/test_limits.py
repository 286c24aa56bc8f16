import numpy as np
import pytest

from ydyn.errors import EmptySolutionError
from ydyn.limits import check_theorem_B, omega_limit_grid, recurrent_cells, strong_invariance_grid
from ydyn.phase_space import CellSet
from ydyn.relation import Relation, alpha_limit, is_strongly_invariant, omega_limit, recurrent_states
from ydyn.semigroup import CellRelation, reach_set
from ydyn.systems import filippov_absorb, interval_rotation, surface_row

from conftest import A, B, C, sweep_relations


@pytest.fixture(scope="module")
def rot():
    sys = interval_rotation()
    return sys, sys.relation()


@pytest.fixture(scope="module")
def fil():
    sys = filippov_absorb()
    return sys, sys.relation()


def widened(v: CellRelation) -> CellRelation:
    """Add the left and right neighbours of every target cell (discretization slack along x)."""
    g = v.grid
    edges = set()
    for i, j in v.edges():
        ix, iy = g.multi_index(j)
        for dx in (-1, 0, 1):
            if 0 <= ix + dx < g.resolution[0]:
                edges.add((i, int(np.ravel_multi_index((ix + dx, iy), g.resolution))))
    return CellRelation.from_edges(g, v.dt, edges, v.mode, 1)


def test_circle_omega_is_full(rot):
    sys, v = rot
    full = CellSet.full(sys.grid)
    for x in np.random.default_rng(0).choice(100, size=10, replace=False):
        rep = omega_limit_grid(v, int(x))
        assert rep.stabilized
        assert rep.omega == full and rep.alpha == full
        assert rep.weak_invariant and rep.inflation == 1


def test_filippov_omega(fil):
    sys, v = fil
    x = sys.grid.locate((0.3, 1.0))
    with pytest.raises(EmptySolutionError):
        omega_limit_grid(v, x)
    rep = omega_limit_grid(v, x, two_sided=False)
    target = sys.grid.locate((0.3, 0.0))
    assert rep.stabilized
    assert rep.omega.indices() == [target]
    assert rep.alpha.is_empty  # the backward solution leaves the box
    assert check_theorem_B(v, x, inflation=1, two_sided=False)


def test_r3_omega(r3):
    v = CellRelation.from_relation(r3)
    rep = omega_limit_grid(v, A)
    assert set(rep.omega.indices()) == {A, B, C}
    assert rep.to_dict()["omega"] == [A, B, C]
    assert set(rep.to_dict()) >= {"base_cell", "omega", "alpha", "period", "stabilized", "weak_invariant", "inflation"}


def test_oracle_equivalence_with_kernel():
    for r in sweep_relations():
        v = CellRelation.from_relation(r)
        core = r.core()
        assert set(recurrent_cells(v).indices()) == recurrent_states(r)
        for x in core:
            rep = omega_limit_grid(v, x)
            assert set(rep.omega.indices()) == omega_limit(r, x)
            assert set(rep.alpha.indices()) == alpha_limit(r, x)
            assert rep.stabilized and rep.weak_invariant
            back = reach_set(v, rep.omega, rep.period) & v.core()
            assert back == rep.omega
        for mask in range(2 ** min(r.n, 6)):
            a = [i for i in range(r.n) if mask >> i & 1]
            assert strong_invariance_grid(v, CellSet.from_indices(v.grid, a)) == is_strongly_invariant(r, a)


def test_no_cycle_is_reported_not_raised(rot):
    _, v = rot
    rep = omega_limit_grid(v, 0, n_max=3)
    assert not rep.stabilized


def test_recurrent_examples(rot, fil):
    sys, v = rot
    assert recurrent_cells(v) == CellSet.full(sys.grid)
    sys, w = fil
    assert recurrent_cells(w) == surface_row(sys.grid)
    tiny = CellRelation.from_relation(Relation.from_edges(2, [(0, 1), (1, 1)]))
    assert recurrent_cells(tiny).indices() == [1]


def test_recurrent_inside_core(fil):
    _, v = fil
    assert recurrent_cells(v) <= v.core()


def test_strong_invariance_examples(r3, fil):
    v = CellRelation.from_relation(r3)
    assert strong_invariance_grid(v, CellSet.full(v.grid))
    assert not strong_invariance_grid(v, CellSet.from_indices(v.grid, [C]))

    sys, w = fil
    row = surface_row(sys.grid)
    middle = CellSet.from_indices(sys.grid, [i for i in row if 2 <= sys.grid.multi_index(i)[0] <= 6])
    assert strong_invariance_grid(w, row)
    # exact vertical dynamics never changes x, so any segment is closed
    assert strong_invariance_grid(w, middle)
    loose = widened(w)
    assert strong_invariance_grid(loose, row)
    assert not strong_invariance_grid(loose, middle)


def test_circle_limit_sets_invariant(rot):
    _, v = rot
    assert check_theorem_B(v, 17, inflation=1)
