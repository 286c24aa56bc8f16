"""Builtin example systems.

``interval_rotation``
    The inclusion ``x' in [1, 2]`` on the unit circle.
``filippov_absorb``
    The piecewise-constant field on the plane that moves down with unit
    speed above ``y = 0``, up below it, and is zero on the line, restricted
    to the box ``[0, 1] x [-1.05, 1.05]``.  The line ``y = 0`` is the middle
    row of the default ``10 x 21`` grid.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from dataclasses import field as dc_field

import numpy as np

from .phase_space import CellSet, Grid, SpaceDescriptor
from .semigroup import CellRelation, build_cell_relation
from .solvers import PiecewiseField, SelectionPolicy, SetValuedField, filippov_bundle, sample_inclusion
from .trajectory import SolutionBundle


@dataclass(frozen=True)
class System:
    name: str
    grid: Grid
    relation_dt: float
    inflation: int
    solver_dt: float
    horizon: tuple[float, float]
    field: SetValuedField | None = None
    piecewise: PiecewiseField | None = None
    speed_bound: float | None = None
    relation_samples: tuple[float, ...] = (0.1, 0.5, 0.9)
    relation_substeps: int = 10
    extras: dict = dc_field(default_factory=dict)

    @property
    def space(self) -> SpaceDescriptor:
        return self.grid.space

    def with_(self, **changes) -> "System":
        return replace(self, **changes)

    def relation(self, threads: int = 1) -> CellRelation:
        if self.field is not None:
            return build_cell_relation(self.field, self.grid, self.relation_dt, self.inflation)
        # piecewise fields: exact observed transitions of simulated solutions
        seeds = np.vstack([self.grid.cell_points(i, self.relation_samples) for i in range(self.grid.n_cells)])
        dt = self.relation_dt / self.relation_substeps
        bundle = filippov_bundle(self.piecewise, seeds, 0.0, self.relation_dt, dt, threads)
        return build_cell_relation(bundle, self.grid, self.relation_dt)

    def bundle(self, seeds=None, n_per_seed: int = 2, policy: SelectionPolicy | None = None, threads: int = 1,
               horizon=None, dt=None) -> SolutionBundle:
        seeds = self.grid.centers() if seeds is None else np.asarray(seeds, dtype=float).reshape(-1, self.grid.dim)
        t_minus, t_plus = horizon or self.horizon
        dt = dt or self.solver_dt
        if self.field is not None:
            return sample_inclusion(self.field, seeds, t_minus, t_plus, dt, n_per_seed, policy or SelectionPolicy(), threads)
        return filippov_bundle(self.piecewise, seeds, t_minus, t_plus, dt, threads)


def interval_rotation(resolution: int = 100) -> System:
    space = SpaceDescriptor.circle(1.0)
    F = SetValuedField.constant(space, [1.0], [2.0], name="interval_rotation")
    return System(
        name="interval_rotation",
        grid=Grid.over(space, resolution),
        relation_dt=0.05,
        inflation=1,
        solver_dt=0.05,
        horizon=(-1.0, 1.0),
        field=F,
        speed_bound=2.0,
    )


def filippov_field(space: SpaceDescriptor | None = None) -> PiecewiseField:
    space = space or SpaceDescriptor.box([(0.0, 1.0), (-1.05, 1.05)])
    down = np.array([0.0, -1.0])
    up = np.array([0.0, 1.0])
    rest = np.zeros(2)
    return PiecewiseField(
        space,
        h=lambda x: float(x[1]),
        f_plus=lambda x: down,
        f_minus=lambda x: up,
        f_zero=lambda x: rest,
        grad_h=lambda x: np.array([0.0, 1.0]),
        name="filippov_absorb",
    )


def filippov_absorb(resolution=(10, 21)) -> System:
    space = SpaceDescriptor.box([(0.0, 1.0), (-1.05, 1.05)])
    grid = Grid.over(space, resolution)
    return System(
        name="filippov_absorb",
        grid=grid,
        relation_dt=0.1,
        inflation=0,
        solver_dt=1e-3,
        horizon=(0.0, 2.0),
        piecewise=filippov_field(space),
        speed_bound=1.0,
    )


def surface_row(grid: Grid) -> CellSet:
    """Cells meeting the line ``y = 0``."""
    return CellSet.from_box(grid, (grid.space.lower[0], 0.0), (grid.space.upper[0], 0.0))


def strip(grid: Grid, y_lo: float, y_hi: float) -> CellSet:
    return CellSet.from_box(grid, (grid.space.lower[0], y_lo), (grid.space.upper[0], y_hi))


BUILTINS = {"interval_rotation": interval_rotation, "filippov_absorb": filippov_absorb}
