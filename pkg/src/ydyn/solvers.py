"""Generators of solution bundles.

* :func:`sample_inclusion` draws piecewise-constant measurable selections of a
  differential inclusion ``x' in F(x)`` and integrates them with explicit
  Euler, forward on ``[0, T+]`` and (through the reversed inclusion
  ``x' in -F(x)``) backward on ``[T-, 0]``.
* :func:`simulate_filippov` integrates a piecewise-smooth field with crossing
  detection and Filippov sliding on the switching surface.
* :func:`extend_backward` grows a trajectory to the left by splicing bundle
  members onto it.

RNG streams: selection ``j`` of seed ``i`` uses
``SeedSequence(policy.seed, spawn_key=(i, j))``, whose two spawned children
drive the forward and the backward half.  Results therefore do not depend on
the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import AmbiguityError, ConstructionError, DomainError
from .phase_space import Grid, SpaceDescriptor
from .trajectory import SolutionBundle, Trajectory, _as_index, concatenate

SELECTION_LAWS = ("corner", "uniform", "extreme")
SURFACE_TOL = 1e-9
GRADIENT_STEP = 1e-6
BISECTION_CAP = 64


@dataclass(frozen=True)
class SetValuedField:
    """Box-valued right-hand side: ``bounds_at(x)`` is the interval hull of ``F(x)``.

    Either ``box`` (a callback) or ``table`` (one box per cell of ``grid``) is
    given.  ``speed_bound`` bounds ``|v|`` over all boxes and ``lipschitz`` the
    variation of the box corners in ``x``; both are declared, not verified.
    """

    space: SpaceDescriptor
    box: Callable | None = None
    table: Mapping | None = None
    grid: Grid | None = None
    speed_bound: float | None = None
    lipschitz: float = 0.0
    name: str = ""

    def __post_init__(self):
        if (self.box is None) == (self.table is None):
            raise ConstructionError("give exactly one of a box callback or a cell table")
        if self.table is not None:
            if self.grid is None or self.grid.space != self.space:
                raise ConstructionError("a cell table needs a grid over the field's space")
            missing = set(range(self.grid.n_cells)) - set(self.table)
            if missing:
                raise ConstructionError(f"cell table has no box for cell {min(missing)}")
            for cell, (lo, hi) in self.table.items():
                self._check_box(np.asarray(lo, float), np.asarray(hi, float), f"cell {cell}")

    @classmethod
    def constant(cls, space: SpaceDescriptor, lo, hi, name: str = "") -> "SetValuedField":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        speed = float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))
        return cls(space, box=lambda x: (lo, hi), speed_bound=speed, name=name)

    def _check_box(self, lo, hi, where):
        if lo.shape != (self.space.dim,) or hi.shape != (self.space.dim,):
            raise ConstructionError(f"{where}: box has the wrong dimension")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConstructionError(f"{where}: unbounded box")
        if np.any(lo > hi):
            raise ConstructionError(f"{where}: empty box [{lo}, {hi}]")

    def bounds_at(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if self.table is not None:
            cell = self.grid.locate(x)
            lo, hi = self.table[cell]
            return np.asarray(lo, float), np.asarray(hi, float)
        lo, hi = self.box(x)
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        self._check_box(lo, hi, f"at x = {x.tolist()}")
        return lo, hi

    def bounds_on_cell(self, grid: Grid, cell: int, point) -> tuple[np.ndarray, np.ndarray]:
        """Box used for a sample point of ``cell`` (tables answer per cell, not per point)."""
        if self.table is not None and grid == self.grid:
            lo, hi = self.table[cell]
            return np.asarray(lo, float), np.asarray(hi, float)
        return self.bounds_at(point)


@dataclass(frozen=True)
class PiecewiseField:
    """``f_plus`` where ``h > 0``, ``f_minus`` where ``h < 0``, optional ``f_zero`` on ``h = 0``."""

    space: SpaceDescriptor
    h: Callable
    f_plus: Callable
    f_minus: Callable
    f_zero: Callable | None = None
    grad_h: Callable | None = None
    surface_tol: float = SURFACE_TOL
    name: str = ""

    def reversed(self) -> "PiecewiseField":
        fz = self.f_zero
        return PiecewiseField(
            self.space,
            self.h,
            lambda x: -np.asarray(self.f_plus(x), dtype=float),
            lambda x: -np.asarray(self.f_minus(x), dtype=float),
            None if fz is None else (lambda x: -np.asarray(fz(x), dtype=float)),
            self.grad_h,
            self.surface_tol,
            self.name,
        )

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad_h is not None:
            return np.asarray(self.grad_h(x), dtype=float)
        g = np.empty_like(x)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = GRADIENT_STEP
            g[k] = (self.h(x + e) - self.h(x - e)) / (2 * GRADIENT_STEP)
        return g

    def surface_velocity(self, x) -> tuple[np.ndarray, str]:
        """Velocity on the switching surface and the regime that produced it."""
        n = self.gradient(x)
        fp = np.asarray(self.f_plus(x), dtype=float)
        fm = np.asarray(self.f_minus(x), dtype=float)
        a, b = float(n @ fp), float(n @ fm)
        if a <= 0 <= b and b > a:
            lam = b / (b - a)
            return lam * fp + (1 - lam) * fm, "slide"
        if a > 0 and b > 0:
            return fp, "cross+"
        if a < 0 and b < 0:
            return fm, "cross-"
        if self.f_zero is not None:
            return np.asarray(self.f_zero(x), dtype=float), "surface"
        raise AmbiguityError(f"both one-sided fields leave the surface at {x.tolist()}", point=x)


@dataclass(frozen=True)
class SelectionPolicy:
    seed: int = 0
    dwell: int = 5
    law: str = "extreme"

    def __post_init__(self):
        if self.dwell < 1:
            raise ValueError("dwell must be at least one step")
        if self.law not in SELECTION_LAWS:
            raise ValueError(f"selection law must be one of {SELECTION_LAWS}")


def _draw(lo, hi, law, rng) -> np.ndarray:
    if law == "uniform":
        return rng.uniform(lo, hi)
    if law == "corner":
        return np.where(rng.random(lo.shape) < 0.5, lo, hi)
    return hi.copy() if rng.random() < 0.5 else lo.copy()


def _euler(F: SetValuedField, x0, n_steps, dt, sign, rng, policy) -> tuple[list, bool]:
    space = F.space
    x = np.asarray(x0, dtype=float)
    out = []
    v = None
    for k in range(n_steps):
        if k % policy.dwell == 0:
            lo, hi = F.bounds_at(x)
            v = _draw(lo, hi, policy.law, rng)
        x = space.reduce(x + sign * dt * v)
        if space.kind == "box" and not space.contains(x):
            return out, True
        out.append(x)
    return out, False


def _horizon_steps(t_minus, t_plus, dt) -> tuple[int, int]:
    if not dt > 0:
        raise ValueError("time step must be positive")
    if t_minus > 0 or t_plus < 0:
        raise DomainError("horizons must satisfy T- <= 0 <= T+")
    return _as_index(-t_minus / dt, "backward horizon"), _as_index(t_plus / dt, "forward horizon")


def _assemble(x0, back, fwd, dt, space, exited_back, exited_fwd, provenance) -> Trajectory:
    samples = np.vstack([np.asarray(back[::-1]).reshape(-1, space.dim), x0[None, :], np.asarray(fwd).reshape(-1, space.dim)])
    prov = dict(provenance)
    if exited_back or exited_fwd:
        prov["exited"] = [side for side, hit in (("backward", exited_back), ("forward", exited_fwd)) if hit]
    return Trajectory(dt, -len(back), samples, not exited_back, not exited_fwd, space, prov)


def sample_inclusion(
    F: SetValuedField,
    seeds: Sequence,
    t_minus: float,
    t_plus: float,
    dt: float,
    n_per_seed: int,
    policy: SelectionPolicy = SelectionPolicy(),
    threads: int = 1,
) -> SolutionBundle:
    """Euler solutions of ``x' in F(x)`` under random piecewise-constant selections."""
    k_back, k_fwd = _horizon_steps(t_minus, t_plus, dt)
    space = F.space
    seeds = [space.reduce(np.atleast_1d(np.asarray(x, dtype=float))) for x in seeds]
    for x in seeds:
        if not space.contains(x):
            raise DomainError(f"seed {x.tolist()} outside the phase space")
    jobs = [(i, j) for i in range(len(seeds)) for j in range(n_per_seed)]

    def run(job):
        i, j = job
        fwd_ss, back_ss = np.random.SeedSequence(policy.seed, spawn_key=(i, j)).spawn(2)
        x0 = seeds[i]
        fwd, ex_f = _euler(F, x0, k_fwd, dt, 1.0, np.random.default_rng(fwd_ss), policy)
        back, ex_b = _euler(F, x0, k_back, dt, -1.0, np.random.default_rng(back_ss), policy)
        return _assemble(x0, back, fwd, dt, space, ex_b, ex_f, {"seed_index": i, "selection": j})

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            members = list(pool.map(run, jobs))
    else:
        members = [run(job) for job in jobs]
    provenance = {
        "solver": "inclusion-euler",
        "field": F.name,
        "seed": policy.seed,
        "law": policy.law,
        "dwell": policy.dwell,
        "horizon": [t_minus, t_plus],
    }
    return SolutionBundle(dt, space, tuple(members), provenance)


def _bisect_hit(Z: PiecewiseField, x, v, span) -> float:
    h0 = Z.h(x)
    lo, hi = 0.0, span
    for _ in range(BISECTION_CAP):
        mid = 0.5 * (lo + hi)
        hm = Z.h(x + mid * v)
        if abs(hm) <= Z.surface_tol:
            return mid
        if (hm > 0) == (h0 > 0):
            lo = mid
        else:
            hi = mid
    return hi


def _filippov_step(Z: PiecewiseField, x, dt) -> np.ndarray:
    remaining = dt
    for _ in range(4):
        hx = Z.h(x)
        if abs(hx) <= Z.surface_tol:
            v, _ = Z.surface_velocity(x)
            return x + remaining * v
        v = np.asarray(Z.f_plus(x) if hx > 0 else Z.f_minus(x), dtype=float)
        x1 = x + remaining * v
        h1 = Z.h(x1)
        if abs(h1) > Z.surface_tol and (h1 > 0) == (hx > 0):
            return x1
        tau = _bisect_hit(Z, x, v, remaining)
        x = x + tau * v
        remaining -= tau
        if remaining <= 0:
            return x
    return x


def _filippov_run(Z: PiecewiseField, x0, n_steps, dt) -> tuple[list, bool]:
    x = np.asarray(x0, dtype=float)
    out = []
    for _ in range(n_steps):
        x = _filippov_step(Z, x, dt)
        if Z.space.kind == "box" and not Z.space.contains(x):
            return out, True
        out.append(x)
    return out, False


def simulate_filippov(Z: PiecewiseField, x0, t_minus: float, t_plus: float, dt: float) -> Trajectory:
    """Filippov solution through ``x0`` on ``[T-, T+]``; backward time integrates ``-Z``."""
    k_back, k_fwd = _horizon_steps(t_minus, t_plus, dt)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not Z.space.contains(x0):
        raise DomainError(f"initial point {x0.tolist()} outside the phase space")
    fwd, ex_f = _filippov_run(Z, x0, k_fwd, dt)
    back, ex_b = _filippov_run(Z.reversed(), x0, k_back, dt) if k_back else ([], False)
    return _assemble(x0, back, fwd, dt, Z.space, ex_b, ex_f, {"solver": "filippov", "x0": x0.tolist()})


def filippov_bundle(Z: PiecewiseField, seeds, t_minus, t_plus, dt, threads: int = 1) -> SolutionBundle:
    seeds = [np.atleast_1d(np.asarray(x, dtype=float)) for x in seeds]
    run = lambda x: simulate_filippov(Z, x, t_minus, t_plus, dt)  # noqa: E731
    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            members = list(pool.map(run, seeds))
    else:
        members = [run(x) for x in seeds]
    provenance = {"solver": "filippov", "field": Z.name, "horizon": [t_minus, t_plus]}
    return SolutionBundle(dt, Z.space, tuple(members), provenance)


def extend_backward(s: SolutionBundle, phi: Trajectory, depth: int, tol: float) -> Trajectory:
    """Splice bundle members onto the left end of ``phi``, greedily, up to ``depth`` times.

    The achieved depth is recorded in the result's provenance.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not phi.left_truncated:
        return phi.replace(provenance={**phi.provenance, "requested_depth": depth, "achieved_depth": 0})
    cur = phi
    achieved = 0
    for _ in range(depth):
        start = cur.samples[0]
        match = None
        for psi in s:
            if len(psi) >= 2 and s.space.distance(psi.samples[-1], start) <= tol:
                match = psi
                break
        if match is None:
            break
        moved = match.replace(k0=cur.k0 - (len(match) - 1))
        cur = concatenate(moved, cur, cur.k0 * cur.dt, tol)
        achieved += 1
        if not match.left_truncated:
            break
    return cur.replace(provenance={**phi.provenance, "requested_depth": depth, "achieved_depth": achieved})
