"""Sampled trajectories, solution bundles and the shift flow.

A :class:`Trajectory` stores samples on the uniform time grid
``{k0*dt, ..., (k0+m-1)*dt}``.  Shifts are restricted to whole steps, so the
flow laws ``shift(phi, 0) == phi`` and ``shift(shift(phi, j), k) ==
shift(phi, j + k)`` hold exactly.  A :class:`SolutionBundle` is a finite
family of trajectories sharing ``dt`` and a phase space; it is the working
stand-in for a shift-invariant solution set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError, GridAlignmentError, SwitchingError
from .phase_space import CellSet, Grid, SpaceDescriptor

ALIGN_TOL = 1e-9  # fraction of a step


def _as_index(value: float, what: str) -> int:
    k = round(value)
    if abs(value - k) > ALIGN_TOL:
        raise GridAlignmentError(f"{what} {value!r} is not a whole number of steps")
    return int(k)


@dataclass(frozen=True, eq=False)
class Trajectory:
    dt: float
    k0: int
    samples: np.ndarray
    left_truncated: bool = False
    right_truncated: bool = False
    space: SpaceDescriptor | None = None
    provenance: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or len(s) == 0:
            raise ValueError("a trajectory needs at least one sample")
        if self.space is not None and not all(self.space.contains(p) for p in s):
            raise DomainError("trajectory leaves its phase space")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "k0", int(self.k0))
        object.__setattr__(self, "dt", float(self.dt))

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.dt == other.dt
            and self.k0 == other.k0
            and self.left_truncated == other.left_truncated
            and self.right_truncated == other.right_truncated
            and self.space == other.space
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None

    def __len__(self):
        return len(self.samples)

    def __repr__(self):
        return f"Trajectory(dt={self.dt}, window=[{self.t_start}, {self.t_end}], m={len(self)})"

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def k_end(self) -> int:
        return self.k0 + len(self.samples) - 1

    @property
    def t_start(self) -> float:
        return self.k0 * self.dt

    @property
    def t_end(self) -> float:
        return self.k_end * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.k0, self.k_end + 1) * self.dt

    def defined_at(self, k: int) -> bool:
        return self.k0 <= k <= self.k_end

    def at_index(self, k: int) -> np.ndarray:
        if not self.defined_at(k):
            raise DomainError(f"step {k} outside window [{self.k0}, {self.k_end}]")
        return self.samples[k - self.k0]

    def index_of(self, t: float) -> int:
        return _as_index(t / self.dt, "time")

    def step_lengths(self) -> np.ndarray:
        if len(self) < 2:
            return np.zeros(0)
        return _distances(self.space, self.samples[:-1], self.samples[1:])

    def replace(self, **changes) -> "Trajectory":
        kw = dict(
            dt=self.dt,
            k0=self.k0,
            samples=self.samples,
            left_truncated=self.left_truncated,
            right_truncated=self.right_truncated,
            space=self.space,
            provenance=self.provenance,
        )
        kw.update(changes)
        return Trajectory(**kw)


def _distances(space: SpaceDescriptor | None, P, Q) -> np.ndarray:
    if space is None:
        d = np.asarray(Q, dtype=float) - np.asarray(P, dtype=float)
        return np.sqrt(np.sum(d * d, axis=-1))
    return space.distances(P, Q)


def _distance(space, p, q) -> float:
    return float(_distances(space, np.asarray(p)[None, :], np.asarray(q)[None, :])[0])


@dataclass(frozen=True, eq=False)
class SolutionBundle:
    dt: float
    space: SpaceDescriptor
    members: tuple = ()
    provenance: Mapping = field(default_factory=dict)

    def __post_init__(self):
        members = tuple(self.members)
        for k, phi in enumerate(members):
            if not math.isclose(phi.dt, self.dt, rel_tol=1e-12):
                raise ValueError(f"member {k} has step {phi.dt}, bundle step is {self.dt}")
            if phi.space is not None and phi.space != self.space:
                raise ValueError(f"member {k} lives in a different space")
        object.__setattr__(self, "members", members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, k):
        return self.members[k]

    def with_members(self, members) -> "SolutionBundle":
        return SolutionBundle(self.dt, self.space, tuple(members), self.provenance)


def shift(phi: Trajectory, k) -> Trajectory:
    """Shift by ``k`` whole steps: ``shift(phi, k)(t) == phi(t + k*dt)``."""
    if isinstance(k, (int, np.integer)):
        k = int(k)
    else:
        k = _as_index(float(k), "shift")
    if k == 0:
        return phi
    return phi.replace(k0=phi.k0 - k)


def shift_time(phi: Trajectory, t: float) -> Trajectory:
    return shift(phi, _as_index(t / phi.dt, "shift time"))


def evaluate(phi: Trajectory, t: float) -> np.ndarray:
    """Value at time ``t``; linear (shortest-arc on tori) between samples."""
    u = t / phi.dt - phi.k0
    k = round(u)
    if abs(u - k) <= ALIGN_TOL:
        u = float(k)
    if u < 0 or u > len(phi) - 1:
        raise DomainError(f"t = {t!r} outside window [{phi.t_start}, {phi.t_end}]")
    i = int(math.floor(u))
    frac = u - i
    if frac == 0:
        return phi.samples[i].copy()
    a, b = phi.samples[i], phi.samples[i + 1]
    if phi.space is None:
        return a + frac * (b - a)
    return phi.space.reduce(a + frac * phi.space.displacement(a, b))


def section(s: SolutionBundle, a: CellSet | Callable[[np.ndarray], bool]) -> SolutionBundle:
    """Members defined at time 0 whose value there lies in ``a``."""
    if isinstance(a, CellSet):
        bits = a.bits
        test = lambda p: bool(bits[a.grid.locate(p)])  # noqa: E731
    else:
        test = a
    return s.with_members(phi for phi in s if phi.defined_at(0) and test(phi.at_index(0)))


def _window_indices(phi: Trajectory, psi: Trajectory, window) -> range:
    t_lo, t_hi = window
    k_lo = math.ceil(t_lo / phi.dt - ALIGN_TOL)
    k_hi = math.floor(t_hi / phi.dt + ALIGN_TOL)
    for f in (phi, psi):
        if k_lo < f.k0 or k_hi > f.k_end:
            raise DomainError(f"window [{t_lo}, {t_hi}] not inside [{f.t_start}, {f.t_end}]")
    return range(k_lo, k_hi + 1)


def cu_distance(phi: Trajectory, psi: Trajectory, window) -> float:
    """Sup of the phase-space distance over grid times in ``window``."""
    if not math.isclose(phi.dt, psi.dt, rel_tol=1e-12):
        raise DomainError("trajectories use different steps")
    ks = _window_indices(phi, psi, window)
    if len(ks) == 0:
        return 0.0
    P = phi.samples[ks.start - phi.k0: ks.stop - phi.k0]
    Q = psi.samples[ks.start - psi.k0: ks.stop - psi.k0]
    return float(_distances(phi.space or psi.space, P, Q).max())


def concatenate(phi: Trajectory, psi: Trajectory, tau: float, tol: float) -> Trajectory:
    """``phi`` before ``tau`` followed by ``psi`` from ``tau`` on."""
    k = _as_index(tau / phi.dt, "splice time")
    if not (phi.defined_at(k) and psi.defined_at(k)):
        raise DomainError(f"both trajectories must be defined at t = {tau!r}")
    gap = _distance(phi.space or psi.space, phi.at_index(k), psi.at_index(k))
    if gap > tol:
        raise SwitchingError(f"values at t = {tau!r} differ by {gap!r} > {tol!r}", gap=gap)
    samples = np.vstack([phi.samples[: k - phi.k0], psi.samples[k - psi.k0:]])
    return Trajectory(
        phi.dt, phi.k0, samples, phi.left_truncated, psi.right_truncated, phi.space or psi.space
    )


def shift_orbit(s: SolutionBundle) -> SolutionBundle:
    """Every whole-step shift of every member that is still defined at time 0.

    This is the finite shift-invariant hull of the bundle: the smallest family
    containing the members and closed under the shifts a sampled window allows.
    """
    out = []
    for phi in s:
        for k in range(phi.k0, phi.k_end + 1):
            out.append(shift(phi, k))
    return s.with_members(out)


def equilibrium_points(s: SolutionBundle, grid: Grid, tol: float) -> CellSet:
    """Cells of ``phi(0)`` over members whose total variation is at most ``tol``."""
    cells = [grid.locate(phi.at_index(0)) for phi in s if phi.defined_at(0) and phi.step_lengths().sum() <= tol]
    return CellSet.from_indices(grid, cells)


def lipschitz_modulus(phi: Trajectory, k_range: tuple[int, int] | None = None) -> float:
    """Largest per-step displacement divided by ``dt``."""
    steps = phi.step_lengths()
    if k_range is not None:
        lo = max(k_range[0], phi.k0) - phi.k0
        hi = min(k_range[1], phi.k_end) - phi.k0
        steps = steps[lo:hi]
    return float(steps.max() / phi.dt) if steps.size else 0.0


@dataclass
class AxiomReport:
    """Sampling-scale witnesses for the solution-space axioms.

    Only compactness, existence and shift closure enter :attr:`passed`; the
    other fields are informative (inclusions are not unique, and a finite
    bundle is never closed under switching).
    """

    n_members: int
    existence_coverage: float
    existence_pass: bool
    uniqueness_gap: float
    uniqueness_pass: bool
    sup_norm: float
    lipschitz_modulus: float
    lipschitz_reference: float
    compactness_pass: bool
    shift_closure_coverage: float
    shift_closure_pass: bool
    switching_pairs: int
    switching_modulus: float
    switching_pass: bool
    ball_gap: float
    ball_pass: bool
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.compactness_pass and self.existence_pass and self.shift_closure_pass

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["passed"] = self.passed
        out["witness"] = "sampling-scale witness, not a proof"
        return out


def check_axioms(
    s: SolutionBundle,
    grid: Grid,
    window: Sequence[float],
    tol: float = 1e-9,
    lipschitz_bound: float | None = None,
    seed: int = 0,
    n_pairs: int = 64,
) -> AxiomReport:
    if len(s) == 0:
        raise ValueError("axiom diagnostics need a nonempty bundle")
    rng = np.random.default_rng(seed)
    members = list(s)
    dt = s.dt
    k_lo = math.ceil(window[0] / dt - ALIGN_TOL)
    k_hi = math.floor(window[1] / dt + ALIGN_TOL)

    at0 = [phi for phi in members if phi.defined_at(0)]
    start_cells = np.array([grid.locate(phi.at_index(0)) for phi in at0], dtype=np.int64)
    covered = np.zeros(grid.n_cells, dtype=bool)
    covered[start_cells] = True
    coverage = float(covered.mean())

    on_window = [phi for phi in at0 if phi.k0 <= k_lo and phi.k_end >= k_hi]
    cell_of = {id(phi): grid.locate(phi.at_index(0)) for phi in on_window}
    groups: dict[int, list] = {}
    for phi in on_window:
        groups.setdefault(cell_of[id(phi)], []).append(phi)
    uniq = 0.0
    for group in groups.values():
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                uniq = max(uniq, cu_distance(group[i], group[j], window))

    sup = max(float(np.abs(phi.samples).max()) for phi in members)
    modulus = max(lipschitz_modulus(phi, (k_lo, k_hi)) for phi in members)
    if lipschitz_bound is not None:
        reference = float(lipschitz_bound)
    else:
        # no declared bound: growth beyond the inner half window disqualifies
        reference = max(lipschitz_modulus(phi, (k_lo // 2, k_hi // 2)) for phi in members)
    compact = bool(np.isfinite(sup)) and modulus <= reference + tol

    hits = 0
    for _ in range(n_pairs):
        phi = members[rng.integers(len(members))]
        k = int(rng.integers(phi.k0, phi.k_end + 1))
        moved = shift(phi, k)
        assert shift(moved, -k) == phi
        hits += bool(covered[grid.locate(moved.at_index(0))])
    shift_cov = hits / n_pairs

    n_splice, splice_mod = 0, 0.0
    if len(members) > 1:
        for _ in range(n_pairs):
            i, j = rng.choice(len(members), size=2, replace=False)
            phi, psi = members[i], members[j]
            lo, hi = max(phi.k0, psi.k0), min(phi.k_end, psi.k_end)
            if lo > hi:
                continue
            gaps = _distances(s.space, phi.samples[lo - phi.k0: hi - phi.k0 + 1], psi.samples[lo - psi.k0: hi - psi.k0 + 1])
            k = lo + int(np.argmin(gaps))
            if gaps.min() <= tol:
                spliced = concatenate(phi, psi, k * dt, tol)
                n_splice += 1
                splice_mod = max(splice_mod, lipschitz_modulus(spliced, (k_lo, k_hi)))
    switching = splice_mod <= reference + tol / dt + tol

    ball = 0.0
    fwd = (0.0, k_hi * dt)
    for cell, group in groups.items():
        if len(group) < 2:
            continue
        base = group[0]
        ball = max(ball, min(cu_distance(base, other, fwd) for other in group[1:]))

    return AxiomReport(
        n_members=len(members),
        existence_coverage=coverage,
        existence_pass=coverage >= 1.0,
        uniqueness_gap=uniq,
        uniqueness_pass=uniq <= tol,
        sup_norm=sup,
        lipschitz_modulus=modulus,
        lipschitz_reference=reference,
        compactness_pass=compact,
        shift_closure_coverage=shift_cov,
        shift_closure_pass=shift_cov >= 1.0,
        switching_pairs=n_splice,
        switching_modulus=splice_mod,
        switching_pass=switching,
        ball_gap=ball,
        ball_pass=ball <= tol,
    )
