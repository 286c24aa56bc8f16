"""Invariant measures of a cell relation and their verification.

A measure ``mu`` on the cells is invariant for the solution set when it is
the time-zero marginal of a shift-invariant measure on trajectories.  That
measure is never built; what can be checked is its consequence
``mu(A) <= mu(V(t)^-1 A)`` for every set ``A`` and every ``t``
(:func:`check_subinvariance`), plus the recurrence statements that follow
from it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import HorizonError
from .phase_space import CellSet, DiscreteMeasure, Grid, inflate
from .semigroup import CellRelation, reach_set
from .trajectory import SolutionBundle, Trajectory

MIN_HORIZON = 100
GRID_TOL = 1e-9


def krylov_bogoliubov(source, x0, T: int, grid: Grid | None = None) -> DiscreteMeasure:
    """Cesàro average over ``n = 0..T`` of occupation (or normalized reach-set) measures.

    ``source`` is a :class:`CellRelation` (``x0`` a cell or a point), a
    :class:`Trajectory`, or a :class:`SolutionBundle` (``x0`` a member index).
    """
    if T < MIN_HORIZON:
        raise HorizonError(f"averaging horizon {T} is shorter than {MIN_HORIZON} steps")
    if isinstance(source, CellRelation):
        g = source.grid
        x = x0 if isinstance(x0, (int, np.integer)) else g.locate(x0)
        cur = np.zeros(g.n_cells, dtype=bool)
        cur[int(x)] = True
        acc = np.zeros(g.n_cells)
        for n in range(T + 1):
            size = int(cur.sum())
            if size == 0:
                raise HorizonError(f"reach set of cell {x} is empty after {n} steps")
            acc[cur] += 1.0 / size
            cur = source.step(cur)
        return DiscreteMeasure(g, acc / (T + 1), normalize=True)
    if grid is None:
        raise ValueError("a grid is needed to bin trajectory samples")
    phi = source[int(x0)] if isinstance(source, SolutionBundle) else source
    if not isinstance(phi, Trajectory):
        raise TypeError("expected a trajectory or a bundle member")
    if not (phi.defined_at(0) and phi.k_end >= T):
        raise HorizonError(f"trajectory window [{phi.t_start}, {phi.t_end}] does not cover {T} steps from 0")
    cells = grid.locate_many(phi.samples[-phi.k0: -phi.k0 + T + 1])
    counts = np.bincount(cells, minlength=grid.n_cells).astype(float)
    return DiscreteMeasure(grid, counts / (T + 1), normalize=True)


@dataclass
class MeasureReport:
    max_violation: float
    pairs_tested: int
    worst_pair: tuple | None
    family: str
    tolerance: float
    passed: bool
    recurrence: dict | None = None
    strict_violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "max_violation": self.max_violation,
            "pairs_tested": self.pairs_tested,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "family": self.family,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "recurrence": self.recurrence,
            "strict_violations": self.strict_violations,
        }


def _check_grid(mu: DiscreteMeasure, v: CellRelation):
    if mu.grid != v.grid:
        raise ValueError("measure and relation live on different grids")


def check_subinvariance(
    mu: DiscreteMeasure, v: CellRelation, family, ts, tol: float = GRID_TOL, description: str = ""
) -> MeasureReport:
    """Largest ``mu(A) - mu(V(t)^-1 A)`` over the family and the step counts ``ts``."""
    _check_grid(mu, v)
    family = list(family)
    worst, where = -math.inf, None
    for k, a in enumerate(family):
        m_a = mu.mass(a)
        for t in ts:
            gap = m_a - mu.mass(reach_set(v, a, -int(t)))
            if gap > worst:
                worst, where = gap, (k, int(t))
    n = len(family) * len(ts)
    return MeasureReport(worst if n else 0.0, n, where, description or f"{len(family)} sets", tol, worst <= tol)


def check_strict_invariance(
    mu: DiscreteMeasure, v: CellRelation, family, ts, tol: float = GRID_TOL, description: str = ""
) -> MeasureReport:
    """``|mu(A) - mu(V(t) A)|`` per pair; violations above ``tol`` are listed."""
    _check_grid(mu, v)
    family = list(family)
    worst, where = -1.0, None
    listed = []
    for k, a in enumerate(family):
        m_a = mu.mass(a)
        for t in ts:
            gap = abs(m_a - mu.mass(reach_set(v, a, int(t))))
            if gap > tol:
                listed.append({"set": k, "t": int(t), "mu_A": m_a, "violation": gap})
            if gap > worst:
                worst, where = gap, (k, int(t))
    worst = max(worst, 0.0)
    n = len(family) * len(ts)
    return MeasureReport(worst, n, where, description or f"{len(family)} sets", tol, not listed, strict_violations=listed)


@dataclass
class PoincareVerdict:
    holds: bool | None
    mass_b: float
    mass_returning: float
    b_infinity: CellSet
    period: int
    steps: int

    @property
    def conclusive(self) -> bool:
        return self.holds is not None

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "conclusive": self.conclusive,
            "mass_B": self.mass_b,
            "mass_B_and_B_infinity": self.mass_returning,
            "B_infinity": self.b_infinity.indices(),
            "period": self.period,
            "steps": self.steps,
        }


def returning_set(v: CellRelation, b: CellSet, n_max: int) -> tuple[CellSet, int, int, bool]:
    """``B_inf``: cells in ``V(n)^-1 B`` for infinitely many ``n``.

    The preimage sequence is eventually periodic, the tails ``B_N`` decrease
    and stop changing once ``N`` passes the pre-period, so ``B_inf`` is the
    union over one period.
    """
    seen: dict[bytes, int] = {}
    seq = []
    cur = b.bits
    for n in range(n_max + 1):
        key = cur.tobytes()
        if key in seen:
            start = seen[key]
            return CellSet(v.grid, np.logical_or.reduce(seq[start:])), n - start, n, True
        seen[key] = n
        seq.append(cur)
        cur = v.step(cur, forward=False)
    return CellSet(v.grid, np.logical_or.reduce(seq[len(seq) // 2:])), 0, n_max, False


def poincare_check(
    mu: DiscreteMeasure, v: CellRelation, b: CellSet, n_max: int | None = None, tol: float = 0.0
) -> PoincareVerdict:
    """``mu(B ∩ B_inf) == mu(B)`` within ``tol``; inconclusive if the preimages never cycle."""
    _check_grid(mu, v)
    n_max = 4 * v.grid.n_cells if n_max is None else int(n_max)
    b_inf, period, steps, found = returning_set(v, b, n_max)
    m_b = mu.mass(b)
    m_ret = mu.mass(b & b_inf)
    holds = abs(m_ret - m_b) <= tol if found else None
    return PoincareVerdict(holds, m_b, m_ret, b_inf, period, steps)


def theorem_D_check(mu: DiscreteMeasure, recurrent: CellSet, inflation: int = 0, tol: float = 0.0) -> bool:
    """Recurrent cells (inflated by ``inflation``) carry the full mass of ``mu``."""
    if recurrent.grid != mu.grid:
        raise ValueError("measure and recurrent set live on different grids")
    return mu.mass(inflate(recurrent, inflation)) >= mu.total - tol


def single_cells(grid: Grid) -> list[CellSet]:
    return [CellSet.from_indices(grid, [i]) for i in range(grid.n_cells)]


def _dyadic_ranges(n: int) -> list[range]:
    out = []
    size = 1
    while True:
        out += [range(k, min(k + size, n)) for k in range(0, n, size)]
        if size >= n:
            return out
        size *= 2


def dyadic_boxes(grid: Grid) -> list[CellSet]:
    """Products of dyadic index intervals (one family level per dimension)."""
    per_dim = [_dyadic_ranges(r) for r in grid.resolution]
    out = []
    for combo in np.ndindex(*[len(p) for p in per_dim]):
        ranges = [per_dim[d][c] for d, c in enumerate(combo)]
        mesh = np.meshgrid(*[np.asarray(r) for r in ranges], indexing="ij")
        cells = np.ravel_multi_index(tuple(m.ravel() for m in mesh), grid.resolution)
        out.append(CellSet.from_indices(grid, cells))
    return out


def dyadic_arcs(grid: Grid) -> list[CellSet]:
    """Arcs of every dyadic length starting at every cell of a one-dimensional grid (wrapping on tori)."""
    n = grid.n_cells
    out = []
    size = 1
    while size <= n:
        for start in range(n):
            idx = [(start + k) % n for k in range(size)] if grid.is_torus else list(range(start, min(start + size, n)))
            out.append(CellSet.from_indices(grid, idx))
        size *= 2
    return out


def random_sets(grid: Grid, rng: np.random.Generator, count: int = 100) -> list[CellSet]:
    out = []
    for _ in range(count):
        p = rng.uniform(0.05, 0.95)
        out.append(CellSet(grid, rng.random(grid.n_cells) < p))
    return out


def all_subsets(grid: Grid) -> list[CellSet]:
    n = grid.n_cells
    return [CellSet.from_indices(grid, c) for k in range(n + 1) for c in combinations(range(n), k)]


def default_family(grid: Grid, seed: int = 0, n_random: int = 100) -> list[CellSet]:
    """Single cells, dyadic cell boxes and random cell sets (every subset on small finite grids)."""
    if grid.is_finite and grid.n_cells <= 12:
        return all_subsets(grid)
    rng = np.random.default_rng(seed)
    return single_cells(grid) + dyadic_boxes(grid) + random_sets(grid, rng, n_random)
