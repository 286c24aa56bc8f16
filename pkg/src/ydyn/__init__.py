"""Set-valued dynamics from axiomatic solution spaces.

Exact computations on finite relations (:mod:`ydyn.relation`), sampled
trajectories and bundles (:mod:`ydyn.trajectory`, :mod:`ydyn.solvers`), the
grid-scale multivalued semigroup (:mod:`ydyn.semigroup`), limit sets
(:mod:`ydyn.limits`) and invariant measures (:mod:`ydyn.measures`).
"""
from .errors import YdynError
from .limits import omega_limit_grid, recurrent_cells
from .measures import check_strict_invariance, check_subinvariance, dyadic_arcs, krylov_bogoliubov, poincare_check
from .phase_space import CellSet, DiscreteMeasure, Grid, SpaceDescriptor
from .relation import Relation
from .semigroup import CellRelation, build_cell_relation, reach_set, viability_kernel
from .systems import filippov_absorb, interval_rotation
from .trajectory import SolutionBundle, Trajectory

__version__ = "0.1.0"

__all__ = [
    "CellRelation",
    "CellSet",
    "DiscreteMeasure",
    "Grid",
    "Relation",
    "SolutionBundle",
    "SpaceDescriptor",
    "Trajectory",
    "YdynError",
    "build_cell_relation",
    "check_strict_invariance",
    "check_subinvariance",
    "dyadic_arcs",
    "filippov_absorb",
    "interval_rotation",
    "krylov_bogoliubov",
    "omega_limit_grid",
    "poincare_check",
    "reach_set",
    "recurrent_cells",
    "viability_kernel",
]
