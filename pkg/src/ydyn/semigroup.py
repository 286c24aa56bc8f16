"""Grid-scale multivalued semigroup.

A :class:`CellRelation` is the one-step (time ``dt``) reachability relation
between grid cells.  Powers of the relation realize ``V(k*dt)``, transposed
powers realize the preimages ``V(k*dt)^-1 = V(-k*dt)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import sparse

from .errors import ConstructionError, DomainError
from .phase_space import BOUNDARY_SNAP, CellSet, Grid
from .relation import Relation
from .solvers import SetValuedField
from .trajectory import ALIGN_TOL, SolutionBundle

FROM_FIELD = "from-field"
FROM_BUNDLE = "from-bundle"
IMPORTED = "imported"


@dataclass(frozen=True, eq=False)
class CellRelation:
    grid: Grid
    dt: float
    matrix: sparse.csr_array
    mode: str = FROM_FIELD
    inflation: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        n = self.grid.n_cells
        m = sparse.csr_array(self.matrix, dtype=np.int32, shape=(n, n))
        m.data[:] = 1
        m.sum_duplicates()
        m.data[:] = 1
        m.sort_indices()
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_transpose", m.T.tocsr())

    @classmethod
    def from_edges(cls, grid: Grid, dt: float, edges, mode=IMPORTED, inflation=0, meta=None) -> "CellRelation":
        edges = np.asarray(sorted(set((int(i), int(j)) for i, j in edges)), dtype=np.int64).reshape(-1, 2)
        n = grid.n_cells
        m = sparse.csr_array((np.ones(len(edges), dtype=np.int32), (edges[:, 0], edges[:, 1])), shape=(n, n))
        return cls(grid, dt, m, mode, inflation, dict(meta or {}))

    @classmethod
    def from_relation(cls, r: Relation, dt: float = 1.0) -> "CellRelation":
        return cls.from_edges(Grid.finite(r.n), dt, r.edges, IMPORTED, 0)

    def to_relation(self) -> Relation:
        return Relation(self.grid.n_cells, frozenset(self.edges()))

    def edges(self):
        m = self.matrix
        for i in range(m.shape[0]):
            for j in m.indices[m.indptr[i]:m.indptr[i + 1]]:
                yield i, int(j)

    @property
    def n_edges(self) -> int:
        return int(self.matrix.nnz)

    def successors(self, i: int) -> list[int]:
        m = self.matrix
        return [int(j) for j in m.indices[m.indptr[i]:m.indptr[i + 1]]]

    def step(self, bits: np.ndarray, forward: bool = True) -> np.ndarray:
        x = bits.astype(np.int32)
        # (A^T x)_j counts edges i -> j with i in x
        return (self._transpose @ x if forward else self.matrix @ x) > 0

    def core(self) -> CellSet:
        return viability_kernel(self, CellSet.full(self.grid))

    def __eq__(self, other):
        if not isinstance(other, CellRelation):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.dt == other.dt
            and (self.matrix != other.matrix).nnz == 0
        )

    __hash__ = None


def _target_range(u_lo: float, u_hi: float, res: int, r: int, wrap: bool):
    first = math.floor(u_lo + BOUNDARY_SNAP) - r
    last = math.ceil(u_hi - BOUNDARY_SNAP) - 1 + r
    last = max(last, first)
    if wrap:
        if last - first + 1 >= res:
            return range(res)
        return [k % res for k in range(first, last + 1)]
    return range(max(first, 0), min(last, res - 1) + 1)


def _field_edges(F: SetValuedField, grid: Grid, dt: float, inflation: int):
    if grid.space != F.space:
        raise ConstructionError("field and grid live on different spaces")
    lower = np.asarray(grid.space.lower)
    scale = np.asarray(grid.resolution) / grid.space.periods
    res = grid.resolution
    wrap = grid.is_torus
    for i in range(grid.n_cells):
        pts = np.vstack([grid.cell_points(i, (0.0, 1.0)), grid.cell_center(i)[None, :]])
        lo_img = np.full(grid.dim, np.inf)
        hi_img = np.full(grid.dim, -np.inf)
        for p in pts:
            vlo, vhi = F.bounds_on_cell(grid, i, p)
            lo_img = np.minimum(lo_img, p + dt * vlo)
            hi_img = np.maximum(hi_img, p + dt * vhi)
        u_lo = (lo_img - lower) * scale
        u_hi = (hi_img - lower) * scale
        ranges = [_target_range(u_lo[k], u_hi[k], res[k], inflation, wrap) for k in range(grid.dim)]
        if any(len(rg) == 0 for rg in ranges):
            continue
        for m in product(*ranges):
            yield i, int(np.ravel_multi_index(m, res))


def _bundle_edges(s: SolutionBundle, grid: Grid, dt: float):
    ratio = dt / s.dt
    k = round(ratio)
    if k < 1 or abs(ratio - k) > ALIGN_TOL:
        raise ConstructionError(f"bundle step {s.dt} does not divide relation step {dt}")
    for phi in s:
        if len(phi) <= k:
            continue
        cells = grid.locate_many(phi.samples)
        yield from zip(cells[:-k].tolist(), cells[k:].tolist())


def build_cell_relation(source, grid: Grid, dt: float, inflation: int = 1) -> CellRelation:
    """Discretize ``V(dt)`` from a box field (outer image hull) or a bundle (observed transitions).

    In bundle mode no inflation is applied: edges are exactly the observed
    cell transitions over time ``dt``.
    """
    if inflation < 0:
        raise ValueError("inflation must be nonnegative")
    if isinstance(source, SetValuedField):
        edges = set(_field_edges(source, grid, dt, inflation))
        return CellRelation.from_edges(grid, dt, edges, FROM_FIELD, inflation, {"field": source.name})
    if isinstance(source, SolutionBundle):
        if len(source) == 0:
            raise ConstructionError("cannot build a relation from an empty bundle")
        if source.space != grid.space:
            raise ConstructionError("bundle and grid live on different spaces")
        edges = set(_bundle_edges(source, grid, dt))
        return CellRelation.from_edges(grid, dt, edges, FROM_BUNDLE, 0, dict(source.provenance))
    raise TypeError(f"cannot build a cell relation from {type(source).__name__}")


def steps_for(v: CellRelation, t: float) -> int:
    """Number of relation steps covering model time ``t`` (must be a whole multiple)."""
    k = round(t / v.dt)
    if abs(t / v.dt - k) > ALIGN_TOL:
        raise DomainError(f"time {t!r} is not a multiple of the relation step {v.dt}")
    return int(k)


def reach_set(v: CellRelation, e: CellSet, k: int) -> CellSet:
    """``k``-fold image of ``e`` (``k < 0``: ``|k|``-fold preimage)."""
    if e.grid != v.grid:
        raise ValueError("cell set and relation live on different grids")
    bits = e.bits
    for _ in range(abs(int(k))):
        if not bits.any():
            break
        bits = v.step(bits, forward=k > 0)
    return CellSet(v.grid, bits)


def viability_kernel(v: CellRelation, a: CellSet) -> CellSet:
    """Largest subset of ``a`` where every cell has a successor and a predecessor inside."""
    cur = a.bits.copy()
    while True:
        x = cur.astype(np.int32)
        has_succ = (v.matrix @ x) > 0
        has_pred = (v._transpose @ x) > 0
        nxt = cur & has_succ & has_pred
        if np.array_equal(nxt, cur):
            return CellSet(v.grid, cur)
        cur = nxt


def is_weakly_invariant_grid(v: CellRelation, a: CellSet) -> bool:
    return viability_kernel(v, a) == a


@dataclass
class SemigroupReport:
    s: int
    t: int
    law_holds: bool
    law_violations: list
    inclusion_holds: bool
    inclusion_violations: list

    @property
    def passed(self) -> bool:
        return self.law_holds and self.inclusion_holds

    def to_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def check_semigroup(v: CellRelation, e: CellSet, s: int, t: int) -> SemigroupReport:
    """Check ``V(s+t)E = V(t)V(s)E`` and ``E ∩ core ⊆ V(t)V(-t)E`` for ``s, t >= 0``."""
    if s < 0 or t < 0:
        raise ValueError("the semigroup law is checked for nonnegative times")
    lhs = reach_set(v, e, s + t)
    rhs = reach_set(v, reach_set(v, e, s), t)
    law_bad = (lhs.bits ^ rhs.bits).nonzero()[0].tolist()
    back_forth = reach_set(v, reach_set(v, e, -t), t)
    inside = e & v.core()
    inc_bad = (inside - back_forth).indices()
    return SemigroupReport(s, t, not law_bad, law_bad, not inc_bad, inc_bad)
