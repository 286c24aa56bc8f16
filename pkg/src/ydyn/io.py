"""File formats.

* bundle: a directory of ``member_NNNN.csv`` files (header ``t,x1,...,xn``,
  one row per grid time, ascending) plus ``manifest.json``;
* cell relation: the relation text format (``states N`` then ``i -> j``)
  preceded by a ``#! grid {...}`` comment carrying the grid as JSON;
* measure: CSV ``cell,weight``;
* reports: JSON with sorted keys;
* field table: one line ``cell lo1 hi1 ... lon hin`` per cell.

Floats are written with ``repr`` so that reading back is exact.
"""
from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .phase_space import CellSet, DiscreteMeasure, Grid, SpaceDescriptor
from .relation import format_relation, parse_relation
from .semigroup import IMPORTED, CellRelation
from .solvers import SetValuedField
from .trajectory import SolutionBundle, Trajectory

GRID_TAG = "#! grid "


def space_to_dict(space: SpaceDescriptor) -> dict:
    if space.kind == "finite":
        return {"kind": space.kind, "labels": list(space.labels)}
    return {"kind": space.kind, "lower": list(space.lower), "upper": list(space.upper)}


def space_from_dict(d: dict) -> SpaceDescriptor:
    if d["kind"] == "finite":
        return SpaceDescriptor.finite(d["labels"])
    return SpaceDescriptor(d["kind"], tuple(map(float, d["lower"])), tuple(map(float, d["upper"])))


def grid_to_dict(grid: Grid) -> dict:
    return {"space": space_to_dict(grid.space), "resolution": list(grid.resolution)}


def grid_from_dict(d: dict) -> Grid:
    return Grid.over(space_from_dict(d["space"]), tuple(d["resolution"]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, CellSet):
        return obj.indices()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


# trajectories and bundles

def trajectory_csv(phi: Trajectory) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{k + 1}" for k in range(phi.dim)])
    for t, row in zip(phi.times(), phi.samples):
        w.writerow([repr(float(t))] + [repr(float(x)) for x in row])
    return buf.getvalue()


def _read_trajectory_csv(path, dt: float, meta: dict, space: SpaceDescriptor) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(
        dt,
        int(meta["k0"]),
        data[:, 1:],
        bool(meta.get("left_truncated", False)),
        bool(meta.get("right_truncated", False)),
        space,
        meta.get("provenance", {}),
    )


def write_bundle(s: SolutionBundle, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    members = []
    for k, phi in enumerate(s):
        name = f"member_{k:04d}.csv"
        (d / name).write_text(trajectory_csv(phi))
        paths.append(d / name)
        members.append({
            "file": name,
            "k0": phi.k0,
            "left_truncated": phi.left_truncated,
            "right_truncated": phi.right_truncated,
            "provenance": dict(phi.provenance),
        })
    manifest = {"dt": s.dt, "space": space_to_dict(s.space), "provenance": dict(s.provenance), "members": members}
    paths.append(write_json(manifest, d / "manifest.json"))
    return paths


def read_bundle(directory) -> SolutionBundle:
    d = Path(directory)
    try:
        manifest = read_json(d / "manifest.json")
    except FileNotFoundError as exc:
        raise ConfigError(f"{d} is not a bundle directory (no manifest.json)") from exc
    space = space_from_dict(manifest["space"])
    dt = float(manifest["dt"])
    members = tuple(_read_trajectory_csv(d / m["file"], dt, m, space) for m in manifest["members"])
    return SolutionBundle(dt, space, members, manifest.get("provenance", {}))


# relations

def format_cell_relation(v: CellRelation) -> str:
    head = {"grid": grid_to_dict(v.grid), "dt": v.dt, "mode": v.mode, "inflation": v.inflation}
    return GRID_TAG + json.dumps(head, sort_keys=True) + "\n" + format_relation(v.to_relation())


def parse_cell_relation(text: str) -> CellRelation:
    """Relation text, with or without the grid header (plain files become finite grids)."""
    r = parse_relation(text)
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    if not first.startswith(GRID_TAG):
        return CellRelation.from_relation(r)
    head = json.loads(first[len(GRID_TAG):])
    grid = grid_from_dict(head["grid"])
    if grid.n_cells != r.n:
        raise DomainError(f"grid has {grid.n_cells} cells but the relation has {r.n} states")
    return CellRelation.from_edges(grid, float(head.get("dt", 1.0)), r.edges, head.get("mode", IMPORTED), int(head.get("inflation", 0)))


def write_cell_relation(v: CellRelation, path) -> Path:
    path = Path(path)
    path.write_text(format_cell_relation(v))
    return path


def read_cell_relation(path) -> CellRelation:
    return parse_cell_relation(Path(path).read_text())


# measures and cell sets

def measure_csv(mu: DiscreteMeasure) -> str:
    lines = ["cell,weight"] + [f"{i},{float(w)!r}" for i, w in enumerate(mu.weights)]
    return "\n".join(lines) + "\n"


def write_measure(mu: DiscreteMeasure, path) -> Path:
    path = Path(path)
    path.write_text(measure_csv(mu))
    return path


def read_measure(path, grid: Grid) -> DiscreteMeasure:
    w = np.zeros(grid.n_cells)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            w[int(row["cell"])] = float(row["weight"])
    return DiscreteMeasure(grid, w)


def cellset_csv(sets: dict) -> str:
    lines = ["set,cell"]
    for name, cs in sets.items():
        lines += [f"{name},{i}" for i in cs.indices()]
    return "\n".join(lines) + "\n"


# field tables

def read_field_table(path, grid: Grid, name: str = "") -> SetValuedField:
    d = grid.dim
    table = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) != 1 + 2 * d:
            raise ConfigError(f"{path}:{lineno}: expected cell index and {d} lo/hi pairs")
        vals = [float(x) for x in line[1:]]
        table[int(line[0])] = (vals[0::2], vals[1::2])
    return SetValuedField(grid.space, table=table, grid=grid, name=name or Path(path).stem)


def write_field_table(F: SetValuedField, path) -> Path:
    lines = []
    for cell in sorted(F.table):
        lo, hi = F.table[cell]
        pairs = " ".join(f"{float(a)!r} {float(b)!r}" for a, b in zip(lo, hi))
        lines.append(f"{cell} {pairs}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
