"""Compact phase spaces, uniform grids and cell-set algebra.

Three kinds of space are supported: axis-aligned boxes, flat tori and finite
label sets.  A :class:`Grid` partitions a box or torus into half-open cells
(the last cell of a box dimension is closed at the top so the box is covered
exactly); a finite space gets one cell per label.  Cells are numbered in
row-major (C) order of their multi-index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, EmptySetError

BOX = "box"
TORUS = "torus"
FINITE = "finite"
BOUNDARY_SNAP = 1e-9  # in cell widths


@dataclass(frozen=True)
class SpaceDescriptor:
    kind: str
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (BOX, TORUS, FINITE):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind == FINITE:
            if not self.labels:
                raise ValueError("finite space needs at least one label")
            if len(set(self.labels)) != len(self.labels):
                raise ValueError("finite space labels must be distinct")
            return
        if len(self.lower) == 0 or len(self.lower) != len(self.upper):
            raise ValueError("bounds must be given for every dimension")
        for k, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not lo < hi:
                raise ValueError(f"dimension {k}: lower bound {lo} is not below upper bound {hi}")

    @classmethod
    def box(cls, bounds: Sequence[tuple[float, float]]) -> "SpaceDescriptor":
        return cls(BOX, tuple(float(b[0]) for b in bounds), tuple(float(b[1]) for b in bounds))

    @classmethod
    def torus(cls, bounds: Sequence[tuple[float, float]]) -> "SpaceDescriptor":
        return cls(TORUS, tuple(float(b[0]) for b in bounds), tuple(float(b[1]) for b in bounds))

    @classmethod
    def circle(cls, period: float = 1.0) -> "SpaceDescriptor":
        return cls.torus([(0.0, period)])

    @classmethod
    def finite(cls, labels: Iterable) -> "SpaceDescriptor":
        return cls(FINITE, labels=tuple(str(lab) for lab in labels))

    @property
    def dim(self) -> int:
        return 1 if self.kind == FINITE else len(self.lower)

    @property
    def periods(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def label_index(self, label) -> int:
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            if 0 <= label < len(self.labels):
                return int(label)
        elif str(label) in self.labels:
            return self.labels.index(str(label))
        raise DomainError(f"unknown label {label!r}")

    def reduce(self, p) -> np.ndarray:
        """Map torus coordinates into the fundamental domain; identity otherwise."""
        p = np.asarray(p, dtype=float)
        if self.kind != TORUS:
            return p
        lo = np.asarray(self.lower)
        per = self.periods
        r = np.mod(p - lo, per)
        # np.mod may round a tiny negative offset up to exactly one period
        r = np.where(r >= per, r - per, r)
        return lo + r

    def contains(self, p) -> bool:
        if self.kind == TORUS:
            return bool(np.all(np.isfinite(p)))
        if self.kind == FINITE:
            try:
                self.label_index(p)
            except DomainError:
                return False
            return True
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def displacement(self, p, q) -> np.ndarray:
        """Shortest vector from p to q (on a torus, ties resolve toward +)."""
        d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
        if self.kind == TORUS:
            per = self.periods
            d = np.mod(d, per)
            d = np.where(d > per / 2, d - per, d)
        return d

    def distance(self, p, q) -> float:
        if self.kind == FINITE:
            return 0.0 if self.label_index(p) == self.label_index(q) else 1.0
        d = self.displacement(p, q)
        return float(np.sqrt(np.sum(d * d, axis=-1)))

    def distances(self, P, Q) -> np.ndarray:
        """Row-wise distances between two arrays of points of equal shape."""
        d = self.displacement(P, Q)
        return np.sqrt(np.sum(d * d, axis=-1))


@dataclass(frozen=True)
class Grid:
    space: SpaceDescriptor
    resolution: tuple[int, ...]

    def __post_init__(self):
        res = tuple(int(r) for r in self.resolution)
        object.__setattr__(self, "resolution", res)
        if self.space.kind == FINITE:
            if res != (len(self.space.labels),):
                raise ValueError("a finite space has exactly one cell per label")
            return
        if len(res) != self.space.dim:
            raise ValueError("resolution must be given for every dimension")
        if any(r < 1 for r in res):
            raise ValueError("resolution must be a positive integer in every dimension")

    @classmethod
    def over(cls, space: SpaceDescriptor, resolution=None) -> "Grid":
        if space.kind == FINITE:
            return cls(space, (len(space.labels),))
        if isinstance(resolution, (int, np.integer)):
            resolution = (int(resolution),) * space.dim
        return cls(space, tuple(resolution))

    @classmethod
    def finite(cls, n: int) -> "Grid":
        return cls.over(SpaceDescriptor.finite(range(n)))

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def widths(self) -> np.ndarray:
        if self.space.kind == FINITE:
            return np.ones(1)
        return self.space.periods / np.asarray(self.resolution)

    @property
    def is_torus(self) -> bool:
        return self.space.kind == TORUS

    @property
    def is_finite(self) -> bool:
        return self.space.kind == FINITE

    def _check_metric(self):
        if self.is_finite:
            raise DomainError("finite spaces have no cell geometry")

    def locate(self, p) -> int:
        if self.is_finite:
            return self.space.label_index(p)
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != (self.dim,):
            raise DomainError(f"expected a point with {self.dim} coordinates, got shape {p.shape}")
        return int(self.locate_many(p[None, :])[0])

    def locate_many(self, points) -> np.ndarray:
        self._check_metric()
        P = np.asarray(points, dtype=float).reshape(-1, self.dim)
        lo = np.asarray(self.space.lower)
        res = np.asarray(self.resolution)
        if self.is_torus:
            P = self.space.reduce(P)
        else:
            bad = (P < lo) | (P > np.asarray(self.space.upper)) | ~np.isfinite(P)
            if bad.any():
                row, k = np.argwhere(bad)[0]
                raise DomainError(
                    f"coordinate {k} = {P[row, k]!r} outside [{self.space.lower[k]}, {self.space.upper[k]}]"
                )
        u = (P - lo) * res / self.space.periods
        # decimal inputs on a cell face (0.3 on a 0.1 grid) belong to the upper cell
        near = np.abs(u - np.round(u)) < BOUNDARY_SNAP
        u = np.where(near, np.round(u), u)
        idx = np.floor(u).astype(np.int64)
        if self.is_torus:
            idx = np.mod(idx, res)
        else:
            # closed top face of the box
            idx = np.clip(idx, 0, res - 1)
        return np.ravel_multi_index(tuple(idx.T), self.resolution)

    def multi_index(self, cells) -> np.ndarray:
        return np.stack(np.unravel_index(np.asarray(cells), self.resolution), axis=-1)

    def cell_bounds(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        self._check_metric()
        m = self.multi_index(i)
        lo = np.asarray(self.space.lower) + m * self.widths
        return lo, lo + self.widths

    def cell_center(self, i: int) -> np.ndarray:
        lo, hi = self.cell_bounds(i)
        return (lo + hi) / 2

    def centers(self) -> np.ndarray:
        self._check_metric()
        m = self.multi_index(np.arange(self.n_cells))
        return np.asarray(self.space.lower) + (m + 0.5) * self.widths

    def cell_points(self, i: int, fractions: Sequence[float] = (0.0, 1.0)) -> np.ndarray:
        """Points of cell ``i`` at the given fractional offsets along each axis."""
        lo, hi = self.cell_bounds(i)
        axes = [lo[k] + np.asarray(fractions) * (hi[k] - lo[k]) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def index_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Adjacency-step (Chebyshev) distance between multi-indices, wrapping on tori."""
        d = np.abs(a - b)
        if self.is_torus:
            res = np.asarray(self.resolution)
            d = np.minimum(d, res - d)
        return d.max(axis=-1)


class CellSet:
    """Immutable set of cells of one grid, stored as a boolean membership vector."""

    __slots__ = ("grid", "bits")

    def __init__(self, grid: Grid, bits):
        bits = np.array(bits, dtype=bool).reshape(-1)
        if bits.shape != (grid.n_cells,):
            raise ValueError(f"membership vector has length {bits.size}, grid has {grid.n_cells} cells")
        bits.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "bits", bits)

    def __setattr__(self, name, value):
        raise AttributeError("CellSet is immutable")

    @classmethod
    def empty(cls, grid: Grid) -> "CellSet":
        return cls(grid, np.zeros(grid.n_cells, dtype=bool))

    @classmethod
    def full(cls, grid: Grid) -> "CellSet":
        return cls(grid, np.ones(grid.n_cells, dtype=bool))

    @classmethod
    def from_indices(cls, grid: Grid, cells: Iterable[int]) -> "CellSet":
        bits = np.zeros(grid.n_cells, dtype=bool)
        idx = np.fromiter((int(c) for c in cells), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= grid.n_cells):
            raise DomainError("cell index out of range")
        bits[idx] = True
        return cls(grid, bits)

    @classmethod
    def from_points(cls, grid: Grid, points) -> "CellSet":
        if grid.is_finite:
            return cls.from_indices(grid, (grid.locate(p) for p in points))
        pts = np.asarray(points, dtype=float).reshape(-1, grid.dim)
        return cls.from_indices(grid, grid.locate_many(pts) if len(pts) else [])

    @classmethod
    def from_predicate(cls, grid: Grid, pred: Callable[[np.ndarray], bool]) -> "CellSet":
        """Cells whose center satisfies ``pred``."""
        return cls(grid, [bool(pred(c)) for c in grid.centers()])

    @classmethod
    def from_box(cls, grid: Grid, lower, upper) -> "CellSet":
        """Cells meeting the closed box [lower, upper] (no wrap-around)."""
        lo = grid.locate(np.asarray(lower, dtype=float))
        hi = grid.locate(np.asarray(upper, dtype=float))
        mlo, mhi = grid.multi_index(lo), grid.multi_index(hi)
        m = grid.multi_index(np.arange(grid.n_cells))
        return cls(grid, np.all((m >= mlo) & (m <= mhi), axis=1))

    def _same(self, other: "CellSet"):
        if not isinstance(other, CellSet):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("cell sets live on different grids")
        return other

    def __or__(self, other):
        return CellSet(self.grid, self.bits | self._same(other).bits)

    def __and__(self, other):
        return CellSet(self.grid, self.bits & self._same(other).bits)

    def __sub__(self, other):
        return CellSet(self.grid, self.bits & ~self._same(other).bits)

    def __invert__(self):
        return CellSet(self.grid, ~self.bits)

    def __le__(self, other):
        return bool(np.all(~self.bits | self._same(other).bits))

    def __ge__(self, other):
        return self._same(other) <= self

    def __eq__(self, other):
        if not isinstance(other, CellSet):
            return NotImplemented
        return self.grid == other.grid and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.grid, self.bits.tobytes()))

    def __len__(self):
        return int(self.bits.sum())

    def __iter__(self):
        return iter(int(i) for i in np.flatnonzero(self.bits))

    def __contains__(self, cell):
        return bool(self.bits[int(cell)])

    def __repr__(self):
        cells = self.indices()
        shown = ", ".join(map(str, cells[:12])) + (", ..." if len(cells) > 12 else "")
        return f"CellSet({{{shown}}}, n_cells={self.grid.n_cells})"

    def indices(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.bits)]

    @property
    def is_empty(self) -> bool:
        return not self.bits.any()

    def isdisjoint(self, other: "CellSet") -> bool:
        return not np.any(self.bits & self._same(other).bits)


def locate(grid: Grid, p) -> int:
    return grid.locate(p)


def _directed(grid: Grid, src: np.ndarray, dst: np.ndarray, chunk: int = 2048) -> int:
    worst = 0
    for start in range(0, len(src), chunk):
        d = grid.index_distance(src[start:start + chunk, None, :], dst[None, :, :])
        worst = max(worst, int(d.min(axis=1).max()))
    return worst


def cell_distance(a: CellSet, b: CellSet) -> int:
    """Symmetric Hausdorff distance between two cell sets, in adjacency steps."""
    a._same(b)
    if a.is_empty or b.is_empty:
        raise EmptySetError("Hausdorff distance needs two nonempty cell sets")
    grid = a.grid
    if grid.is_finite:
        return 0 if a == b else 1
    ma = grid.multi_index(np.flatnonzero(a.bits))
    mb = grid.multi_index(np.flatnonzero(b.bits))
    return max(_directed(grid, ma, mb), _directed(grid, mb, ma))


def _dilate_axis(arr: np.ndarray, r: int, axis: int, wrap: bool) -> np.ndarray:
    n = arr.shape[axis]
    out = arr.copy()
    if wrap:
        for s in range(1, min(r, n - 1) + 1):
            out |= np.roll(arr, s, axis=axis) | np.roll(arr, -s, axis=axis)
        return out
    for s in range(1, min(r, n - 1) + 1):
        lead = [slice(None)] * arr.ndim
        trail = [slice(None)] * arr.ndim
        lead[axis], trail[axis] = slice(s, None), slice(None, -s)
        out[tuple(lead)] |= arr[tuple(trail)]
        out[tuple(trail)] |= arr[tuple(lead)]
    return out


def inflate(a: CellSet, r: int) -> CellSet:
    """All cells within ``r`` adjacency steps of ``a``."""
    if r < 0:
        raise ValueError("inflation radius must be nonnegative")
    grid = a.grid
    if r == 0 or a.is_empty:
        return a
    if grid.is_finite:
        return CellSet.full(grid)
    arr = a.bits.reshape(grid.resolution)
    for axis in range(grid.dim):
        arr = _dilate_axis(arr, r, axis, grid.is_torus)
    return CellSet(grid, arr.reshape(-1))


class DiscreteMeasure:
    """Probability weights over the cells of a grid (or the states of a relation)."""

    __slots__ = ("grid", "weights")

    def __init__(self, grid: Grid, weights, normalize: bool = False):
        w = np.array(weights, dtype=float).reshape(-1)
        if w.shape != (grid.n_cells,):
            raise ValueError(f"weight vector has length {w.size}, grid has {grid.n_cells} cells")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("measure weights must be finite and nonnegative")
        total = math.fsum(w)
        if normalize:
            if total <= 0:
                raise DomainError("cannot normalize a zero measure")
            w = w / total
            total = math.fsum(w)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"total mass {total!r} differs from 1")
        w.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "weights", w)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteMeasure is immutable")

    @classmethod
    def uniform(cls, grid: Grid) -> "DiscreteMeasure":
        return cls(grid, np.full(grid.n_cells, 1.0 / grid.n_cells), normalize=True)

    @classmethod
    def uniform_on(cls, cells: CellSet) -> "DiscreteMeasure":
        if cells.is_empty:
            raise EmptySetError("uniform measure on an empty set")
        return cls(cells.grid, cells.bits.astype(float), normalize=True)

    @classmethod
    def point_mass(cls, grid: Grid, cell: int) -> "DiscreteMeasure":
        w = np.zeros(grid.n_cells)
        w[int(cell)] = 1.0
        return cls(grid, w)

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    def mass(self, cells) -> float:
        """Measure of a cell set (compensated summation, so equal supports give equal sums)."""
        if isinstance(cells, CellSet):
            if cells.grid != self.grid:
                raise ValueError("cell set and measure live on different grids")
            return math.fsum(self.weights[cells.bits])
        return math.fsum(self.weights[np.fromiter((int(c) for c in cells), dtype=np.int64)])

    def support(self) -> CellSet:
        return CellSet(self.grid, self.weights > 0)

    def total_variation(self, other: "DiscreteMeasure") -> float:
        return 0.5 * math.fsum(np.abs(self.weights - other.weights))

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.grid == other.grid and bool(np.array_equal(self.weights, other.weights))

    def __repr__(self):
        return f"DiscreteMeasure(n_cells={self.grid.n_cells}, support={len(self.support())})"
