"""Limit sets, recurrence and invariance verdicts on a cell relation.

``omega_limit_grid`` follows the reach sets ``R_n = V(n)({x})`` inside the
viable core.  Over finitely many cells the sequence ``R_n`` is eventually
periodic; the limit set is the union of the sets on one period, i.e. the
cells visited at infinitely many times.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySolutionError
from .phase_space import CellSet, inflate
from .semigroup import CellRelation, reach_set, viability_kernel


def forward_viable(v: CellRelation, a: CellSet | None = None, forward: bool = True) -> CellSet:
    """Largest subset of ``a`` where every cell has a successor (predecessor if not ``forward``) inside."""
    cur = (a.bits if a is not None else np.ones(v.grid.n_cells, dtype=bool)).copy()
    m = v.matrix if forward else v._transpose
    while True:
        nxt = cur & ((m @ cur.astype(np.int32)) > 0)
        if np.array_equal(nxt, cur):
            return CellSet(v.grid, cur)
        cur = nxt


@dataclass
class LimitSetReport:
    base_cell: int
    omega: CellSet
    alpha: CellSet
    period: int
    alpha_period: int
    steps: int
    stabilized: bool
    weak_invariant: bool
    inflation: int

    def to_dict(self) -> dict:
        return {
            "base_cell": self.base_cell,
            "omega": self.omega.indices(),
            "alpha": self.alpha.indices(),
            "period": self.period,
            "alpha_period": self.alpha_period,
            "steps": self.steps,
            "stabilized": self.stabilized,
            "weak_invariant": self.weak_invariant,
            "inflation": self.inflation,
        }


def _cycle(v: CellRelation, x: int, within: np.ndarray, forward: bool, n_max: int):
    """Union over the eventual cycle of ``R_n``; returns (bits, period, first repeat index, found)."""
    cur = np.zeros(v.grid.n_cells, dtype=bool)
    cur[x] = True
    seen: dict[bytes, int] = {}
    seq = []
    for n in range(n_max + 1):
        key = cur.tobytes()
        if key in seen:
            start = seen[key]
            union = np.logical_or.reduce(seq[start:])
            return union, n - start, n, True
        seen[key] = n
        seq.append(cur)
        cur = v.step(cur, forward) & within
    tail = np.logical_or.reduce(seq[len(seq) // 2:])
    return tail, 0, n_max, False


def _weakly_invariant_up_to(v: CellRelation, a: CellSet, r: int) -> bool:
    if a.is_empty:
        return True
    return a <= viability_kernel(v, inflate(a, r))


def omega_limit_grid(
    v: CellRelation,
    x: int,
    n_max: int | None = None,
    inflation: int | None = None,
    two_sided: bool = True,
) -> LimitSetReport:
    """ω and α limit cells of ``x``.

    With ``two_sided`` (the default) solutions are the complete paths of the
    relation and ``x`` must lie in the viable core.  Otherwise forward paths
    only need to continue forever (and backward ones backward), which admits
    base points whose backward solution leaves a bounded box.
    """
    n_max = 4 * v.grid.n_cells if n_max is None else int(n_max)
    if inflation is None:
        inflation = 0 if v.grid.is_finite else 1
    x = int(x)
    if two_sided:
        fwd_dom = bwd_dom = v.core()
    else:
        fwd_dom = forward_viable(v, forward=True)
        bwd_dom = forward_viable(v, forward=False)
    if x not in fwd_dom:
        raise EmptySolutionError(f"cell {x} lies on no {'complete' if two_sided else 'forward-complete'} trajectory")
    om, period, steps, found = _cycle(v, x, fwd_dom.bits, True, n_max)
    if x in bwd_dom:
        al, a_period, a_steps, a_found = _cycle(v, x, bwd_dom.bits, False, n_max)
    else:
        al, a_period, a_steps, a_found = np.zeros(v.grid.n_cells, dtype=bool), 0, 0, True
    omega = CellSet(v.grid, om)
    alpha = CellSet(v.grid, al)
    weak = _weakly_invariant_up_to(v, omega, inflation) and _weakly_invariant_up_to(v, alpha, inflation)
    return LimitSetReport(x, omega, alpha, period, a_period, max(steps, a_steps), found and a_found, weak, inflation)


def recurrent_cells(v: CellRelation, n_max: int | None = None) -> CellSet:
    """Cells of the viable core lying in their own ω-limit set."""
    core = v.core()
    n_max = 4 * v.grid.n_cells if n_max is None else int(n_max)
    out = np.zeros(v.grid.n_cells, dtype=bool)
    for x in core:
        om, *_ = _cycle(v, x, core.bits, True, n_max)
        out[x] = om[x]
    return CellSet(v.grid, out)


def check_theorem_B(
    v: CellRelation, x: int, n_max: int | None = None, inflation: int | None = None, two_sided: bool = True
) -> bool:
    """Weak invariance of the ω- and α-limit sets of ``x``, up to ``inflation`` cells."""
    return omega_limit_grid(v, x, n_max, inflation, two_sided).weak_invariant


def strong_invariance_grid(v: CellRelation, a: CellSet) -> bool:
    """True iff ``a`` consists of core cells and is closed under one-step images and preimages in the core."""
    core = v.core()
    if not a <= core:
        return False
    return (reach_set(v, a, 1) & core) <= a and (reach_set(v, a, -1) & core) <= a
