import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ydyn.errors import DomainError, EmptySetError
from ydyn.phase_space import CellSet, DiscreteMeasure, Grid, SpaceDescriptor, cell_distance, inflate, locate

CIRCLE10 = Grid.over(SpaceDescriptor.circle(1.0), 10)
BOX4 = Grid.over(SpaceDescriptor.box([(0.0, 1.0)]), 4)
PLANE = Grid.over(SpaceDescriptor.box([(0.0, 1.0), (-1.05, 1.05)]), (10, 21))
TORUS2 = Grid.over(SpaceDescriptor.torus([(0.0, 1.0), (0.0, 2.0)]), (5, 7))


def test_locate_examples():
    assert locate(CIRCLE10, 0.25) == 2
    assert locate(CIRCLE10, 1.25) == 2
    assert locate(CIRCLE10, -0.75) == 2
    with pytest.raises(DomainError, match="coordinate 0"):
        locate(BOX4, 1.2)


def test_box_is_exactly_partitioned():
    assert locate(BOX4, 1.0) == 3
    assert locate(BOX4, 0.0) == 0
    assert locate(BOX4, 0.25) == 1


def test_finite_locate():
    g = Grid.over(SpaceDescriptor.finite(["a", "b", "c"]))
    assert g.n_cells == 3
    assert locate(g, "b") == 1
    assert locate(g, 2) == 2
    with pytest.raises(DomainError):
        locate(g, "z")


def test_descriptor_invariants():
    with pytest.raises(ValueError):
        SpaceDescriptor.box([(1.0, 1.0)])
    with pytest.raises(ValueError):
        SpaceDescriptor.finite([])
    with pytest.raises(ValueError):
        SpaceDescriptor.finite(["a", "a"])


@pytest.mark.parametrize("grid", [CIRCLE10, BOX4, PLANE, TORUS2])
def test_locate_of_center_is_identity(grid):
    centers = grid.centers()
    assert list(grid.locate_many(centers)) == list(range(grid.n_cells))


def test_plane_rows():
    assert locate(PLANE, (0.3, 0.0)) == np.ravel_multi_index((3, 10), (10, 21))
    assert locate(PLANE, (0.3, 1.0)) == np.ravel_multi_index((3, 20), (10, 21))


def test_cell_distance_examples():
    a = CellSet.from_indices(CIRCLE10, [0])
    assert cell_distance(a, a) == 0
    assert cell_distance(a, CellSet.from_indices(CIRCLE10, [5])) == 5
    assert cell_distance(a, CellSet.from_indices(CIRCLE10, [9])) == 1
    with pytest.raises(EmptySetError):
        cell_distance(a, CellSet.empty(CIRCLE10))


def test_inflate_examples():
    three = CellSet.from_indices(CIRCLE10, [3])
    assert inflate(three, 0) == three
    assert inflate(three, 1).indices() == [2, 3, 4]
    assert inflate(CellSet.from_indices(CIRCLE10, [0]), 1).indices() == [0, 1, 9]
    assert inflate(CellSet.from_indices(BOX4, [0]), 1).indices() == [0, 1]
    full = CellSet.full(PLANE)
    assert inflate(full, 3) == full
    assert inflate(CellSet.from_indices(CIRCLE10, [0]), 7) == CellSet.full(CIRCLE10)


def test_inflate_2d_is_chebyshev_box():
    c = np.ravel_multi_index((3, 10), PLANE.resolution)
    got = inflate(CellSet.from_indices(PLANE, [c]), 1)
    assert len(got) == 9


def test_cellset_algebra():
    a = CellSet.from_indices(CIRCLE10, [1, 2, 3])
    b = CellSet.from_indices(CIRCLE10, [3, 4])
    assert (a | b).indices() == [1, 2, 3, 4]
    assert (a & b).indices() == [3]
    assert (a - b).indices() == [1, 2]
    assert len(~a) == 7
    assert (a & b) <= a
    with pytest.raises(ValueError):
        a | CellSet.empty(BOX4)
    with pytest.raises(AttributeError):
        a.bits = None


def test_discrete_measure_basics():
    mu = DiscreteMeasure.uniform(CIRCLE10)
    assert mu.mass(CellSet.full(CIRCLE10)) == pytest.approx(1.0, abs=1e-15)
    assert mu.mass(CellSet.from_indices(CIRCLE10, [0, 1])) == pytest.approx(0.2)
    with pytest.raises(DomainError):
        DiscreteMeasure(CIRCLE10, np.full(10, 0.2))


def _random_sets(grid):
    return st.lists(st.booleans(), min_size=grid.n_cells, max_size=grid.n_cells).filter(any).map(
        lambda bits: CellSet(grid, bits)
    )


@pytest.mark.parametrize("grid", [CIRCLE10, TORUS2, Grid.over(SpaceDescriptor.box([(0, 1), (0, 1)]), (4, 5))])
def test_cell_distance_triangle_inequality(grid):
    @settings(max_examples=60, deadline=None)
    @given(_random_sets(grid), _random_sets(grid), _random_sets(grid))
    def check(a, b, c):
        assert cell_distance(a, c) <= cell_distance(a, b) + cell_distance(b, c)
        assert cell_distance(a, b) == cell_distance(b, a)

    check()


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.booleans(), min_size=35, max_size=35),
    st.lists(st.booleans(), min_size=35, max_size=35),
    st.integers(0, 4),
)
def test_inflate_is_monotone(bits_a, bits_b, r):
    a = CellSet(TORUS2, bits_a)
    b = a | CellSet(TORUS2, bits_b)
    assert inflate(a, r) <= inflate(b, r)
    assert inflate(a, r) <= inflate(a, r + 1)
    assert a <= inflate(a, r)
