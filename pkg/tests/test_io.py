import numpy as np
import pytest

from ydyn.errors import ConfigError, DomainError
from ydyn.io import (
    grid_from_dict,
    grid_to_dict,
    parse_cell_relation,
    read_bundle,
    read_cell_relation,
    read_field_table,
    read_measure,
    write_bundle,
    write_cell_relation,
    write_field_table,
    write_measure,
)
from ydyn.phase_space import DiscreteMeasure, Grid, SpaceDescriptor
from ydyn.semigroup import CellRelation
from ydyn.solvers import SetValuedField
from ydyn.systems import interval_rotation


def test_grid_round_trip():
    for g in (Grid.finite(3), Grid.over(SpaceDescriptor.circle(1.0), 10), Grid.over(SpaceDescriptor.box([(0, 1), (-1, 2)]), (4, 5))):
        back = grid_from_dict(grid_to_dict(g))
        assert back.n_cells == g.n_cells and back.space == g.space


def test_bundle_round_trip_exact(tmp_path):
    s = interval_rotation().bundle(n_per_seed=1)
    write_bundle(s, tmp_path / "b")
    back = read_bundle(tmp_path / "b")
    assert len(back) == len(s) and back.dt == s.dt
    for a, b in zip(s, back):
        assert a.k0 == b.k0
        np.testing.assert_array_equal(a.samples, b.samples)


def test_read_bundle_without_manifest(tmp_path):
    with pytest.raises(ConfigError):
        read_bundle(tmp_path)


def test_cell_relation_round_trip(tmp_path):
    sys = interval_rotation()
    v = sys.relation()
    back = read_cell_relation(write_cell_relation(v, tmp_path / "r.txt"))
    assert back.grid.n_cells == v.grid.n_cells and back.dt == v.dt
    assert back.to_relation().edges == v.to_relation().edges


def test_plain_relation_text_is_finite():
    v = parse_cell_relation("states 2\n0 -> 1\n1 -> 0\n")
    assert v.grid.is_finite and v.grid.n_cells == 2


def test_header_size_mismatch():
    text = '#! grid {"grid": {"space": {"kind": "finite", "labels": ["a", "b", "c"]}, "resolution": [3]}}\nstates 2\n0 -> 1\n'
    with pytest.raises(DomainError):
        parse_cell_relation(text)


def test_measure_round_trip(tmp_path):
    g = Grid.over(SpaceDescriptor.circle(1.0), 7)
    mu = DiscreteMeasure(g, np.arange(1, 8) / 28)
    assert read_measure(write_measure(mu, tmp_path / "m.csv"), g) == mu


def test_field_table_round_trip(tmp_path):
    space = SpaceDescriptor.box([(0.0, 1.0)])
    g = Grid.over(space, 2)
    F = SetValuedField(space, table={0: ([1.0], [2.0]), 1: ([-1.0], [0.5])}, grid=g)
    back = read_field_table(write_field_table(F, tmp_path / "f.txt"), g)
    assert back.table == {0: ([1.0], [2.0]), 1: ([-1.0], [0.5])}


def test_field_table_bad_line(tmp_path):
    p = tmp_path / "f.txt"
    p.write_text("0 1.0\n")
    with pytest.raises(ConfigError, match="f.txt:1"):
        read_field_table(p, Grid.over(SpaceDescriptor.box([(0.0, 1.0)]), 2))
