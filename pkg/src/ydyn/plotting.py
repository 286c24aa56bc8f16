"""SVG figures of bundles, cell sets and measures.

Output is deterministic: the SVG hash salt is fixed and no date is embedded,
so identical inputs give byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import PatchCollection  # noqa: E402
from matplotlib.patches import Rectangle, Wedge  # noqa: E402

from .errors import PlotError  # noqa: E402
from .phase_space import CellSet, DiscreteMeasure, Grid  # noqa: E402
from .trajectory import SolutionBundle  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "ydyn"
matplotlib.rcParams["svg.fonttype"] = "path"
matplotlib.rcParams["path.simplify"] = False

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _dims(dim: int, dims) -> tuple[int, ...]:
    if dims is None:
        if dim > 2:
            raise PlotError(f"cannot draw a {dim}-dimensional artifact; choose two coordinates with --project i,j")
        return tuple(range(dim))
    dims = tuple(int(d) for d in dims)
    if not 1 <= len(dims) <= 2 or any(not 0 <= d < dim for d in dims):
        raise PlotError(f"projection {dims} is not a choice of one or two of the {dim} coordinates")
    return dims


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _break_wraps(xs: np.ndarray, period: float | None, cols=None) -> np.ndarray:
    """Insert NaN rows where a torus coordinate wraps, so polylines do not cross the picture."""
    if period is None or len(xs) < 2:
        return xs
    watched = xs if cols is None else xs[:, cols]
    jumps = np.abs(np.diff(watched, axis=0)).max(axis=1) > period / 2
    if not jumps.any():
        return xs
    out = []
    for k, row in enumerate(xs):
        if k and jumps[k - 1]:
            out.append(np.full(xs.shape[1], np.nan))
        out.append(row)
    return np.asarray(out)


def plot_bundle(s: SolutionBundle, path, dims=None, title: str = "", against_time: bool = False) -> Path:
    """Members as polylines: a phase portrait in two dimensions, one coordinate against ``t`` otherwise.

    ``against_time`` forces the time axis; it plots the last coordinate unless ``dims`` names one.
    """
    if s.space.kind == "finite":
        raise PlotError("bundles on finite spaces have no phase portrait")
    if against_time:
        dims = (s.space.dim - 1,) if dims is None else tuple(dims)[-1:]
    dims = _dims(s.space.dim, dims)
    periods = s.space.periods[list(dims)]
    period = float(periods.max()) if s.space.kind == "torus" else None
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for k, phi in enumerate(s):
        colour = PALETTE[k % len(PALETTE)]
        if len(dims) == 1:
            pts = _break_wraps(np.column_stack([phi.times(), phi.samples[:, dims[0]]]), period, [1])
            ax.plot(pts[:, 0], pts[:, 1], color=colour, lw=0.8)
        else:
            pts = _break_wraps(phi.samples[:, list(dims)], period)
            ax.plot(pts[:, 0], pts[:, 1], color=colour, lw=0.8)
            if phi.defined_at(0):
                ax.plot(*phi.at_index(0)[list(dims)], "o", color=colour, ms=2)
    lo, hi = np.asarray(s.space.lower)[list(dims)], np.asarray(s.space.upper)[list(dims)]
    if len(dims) == 1:
        ax.set_xlabel("t")
        ax.set_ylabel(f"x{dims[0] + 1}")
        ax.set_ylim(lo[0], hi[0])
    else:
        ax.set_xlabel(f"x{dims[0] + 1}")
        ax.set_ylabel(f"x{dims[1] + 1}")
        ax.set_xlim(lo[0], hi[0])
        ax.set_ylim(lo[1], hi[1])
    ax.set_title(title or f"{len(s)} trajectories")
    return _save(fig, path)


def _rectangles(grid: Grid, cells, dims) -> list[Rectangle]:
    cells = list(cells)
    if not cells:
        return []
    lower = np.asarray(grid.space.lower)
    widths = grid.widths
    mi = grid.multi_index(np.asarray(cells))
    seen = set()
    out = []
    for row in mi:
        key = tuple(int(row[d]) for d in dims)
        if key in seen:
            continue
        seen.add(key)
        if len(dims) == 1:
            x0 = lower[dims[0]] + key[0] * widths[dims[0]]
            out.append(Rectangle((x0, 0.0), widths[dims[0]], 1.0))
        else:
            x0 = lower[dims[0]] + key[0] * widths[dims[0]]
            y0 = lower[dims[1]] + key[1] * widths[dims[1]]
            out.append(Rectangle((x0, y0), widths[dims[0]], widths[dims[1]]))
    return out


def plot_cells(sets: dict, path, dims=None, title: str = "") -> Path:
    """Each named :class:`CellSet` as shaded rectangles (projected when ``dims`` is given)."""
    if not sets:
        raise PlotError("nothing to draw")
    grid = next(iter(sets.values())).grid
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if grid.is_finite:
        names = list(sets)
        for k, name in enumerate(names):
            idx = sets[name].indices()
            ax.bar(idx, [1.0] * len(idx), bottom=k, width=0.8, color=PALETTE[k % len(PALETTE)], label=name)
        ax.set_xlabel("state")
        ax.set_yticks([])
    else:
        dims = _dims(grid.dim, dims)
        for k, (name, cs) in enumerate(sets.items()):
            patches = _rectangles(grid, cs.indices(), dims)
            colour = PALETTE[k % len(PALETTE)]
            ax.add_collection(PatchCollection(patches, facecolor=colour, edgecolor="none", alpha=0.45))
            ax.plot([], [], "s", color=colour, alpha=0.45, label=name)
        lo, hi = np.asarray(grid.space.lower), np.asarray(grid.space.upper)
        ax.set_xlim(lo[dims[0]], hi[dims[0]])
        ax.set_xlabel(f"x{dims[0] + 1}")
        if len(dims) == 2:
            ax.set_ylim(lo[dims[1]], hi[dims[1]])
            ax.set_ylabel(f"x{dims[1] + 1}")
        else:
            ax.set_ylim(0, 1)
            ax.set_yticks([])
    ax.legend(loc="upper right", fontsize="small")
    ax.set_title(title)
    return _save(fig, path)


def plot_measure(mu: DiscreteMeasure, path, dims=None, title: str = "") -> Path:
    """Heat map of the cell weights (a ring on the circle)."""
    grid = mu.grid
    w = mu.weights
    cmap = plt.get_cmap("viridis")
    fig, ax = plt.subplots(figsize=(5.5, 5))
    vmax = float(w.max()) or 1.0
    norm = matplotlib.colors.Normalize(vmin=0.0, vmax=vmax)
    if grid.is_finite:
        ax.bar(range(grid.n_cells), w, color=cmap(norm(w)))
        ax.set_xlabel("state")
        ax.set_ylabel("weight")
    elif grid.dim == 1 and grid.is_torus and dims is None:
        n = grid.n_cells
        wedges = [Wedge((0, 0), 1.0, 360.0 * k / n, 360.0 * (k + 1) / n, width=0.3) for k in range(n)]
        coll = PatchCollection(wedges, cmap=cmap, norm=norm, edgecolor="none")
        coll.set_array(w)
        ax.add_collection(coll)
        ax.set_xlim(-1.1, 1.1)
        ax.set_ylim(-1.1, 1.1)
        ax.set_aspect("equal")
        ax.axis("off")
        fig.colorbar(coll, ax=ax, shrink=0.7)
    else:
        dims = _dims(grid.dim, dims)
        field = w.reshape(grid.resolution)
        drop = tuple(k for k in range(grid.dim) if k not in dims)
        if drop:
            field = field.sum(axis=drop)
        lo, hi = np.asarray(grid.space.lower), np.asarray(grid.space.upper)
        if len(dims) == 1:
            field = field[None, :]
            extent = (lo[dims[0]], hi[dims[0]], 0, 1)
        else:
            if dims[0] > dims[1]:
                field = field.T
            field = field.T
            extent = (lo[dims[0]], hi[dims[0]], lo[dims[1]], hi[dims[1]])
        im = ax.imshow(field, origin="lower", extent=extent, aspect="auto", cmap=cmap, vmin=0.0, vmax=float(field.max()) or 1.0,
                       interpolation="nearest")
        fig.colorbar(im, ax=ax, shrink=0.8)
        ax.set_xlabel(f"x{dims[0] + 1}")
        if len(dims) == 2:
            ax.set_ylabel(f"x{dims[1] + 1}")
    ax.set_title(title)
    return _save(fig, path)


def plot_cellset(cs: CellSet, path, dims=None, title: str = "") -> Path:
    return plot_cells({"cells": cs}, path, dims, title)
