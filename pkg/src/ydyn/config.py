"""Run configuration: an INI file with sections space, grid, system, solver, analysis, output.

Grammar (every key optional unless noted)::

    [space]     kind = box | torus | finite
                bounds = lo hi, lo hi, ...     (one pair per dimension)
                labels = a b c                 (finite spaces)
    [grid]      resolution = n1 n2 ...
    [system]    exactly one of
                  builtin = interval_rotation | filippov_absorb
                  field_table = PATH           (lines "cell lo1 hi1 ... lon hin")
                  relation = PATH              (relation text, optional grid header)
                  bundle = PATH                (bundle directory)
                relation_dt, inflation
    [solver]    dt, t_minus, t_plus, seed, n_per_seed, dwell,
                law = extreme | corner | uniform,
                seeds = centers | x1 x2; x1 x2; ...
                lipschitz_bound
    [analysis]  points = x1 x2; ...    cells = i j ...     steps = 1 10 20
                inflation, n_max, tolerance, two_sided = true | false
                measure = uniform | uniform_on | krylov | markov
                measure_box = lo1 lo2 | hi1 hi2       krylov_T, krylov_from
                sets = name: lo1 lo2 | hi1 hi2; name2: ...
                strict_sets = name ...                strict_steps = 10
                random_sets = 100     family = default | arcs
    [output]    dir, formats = csv json svg

Paths are resolved against the directory of the config file.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .phase_space import CellSet, Grid, SpaceDescriptor
from .semigroup import CellRelation, build_cell_relation
from .solvers import SELECTION_LAWS, SelectionPolicy
from .systems import BUILTINS, System
from .trajectory import ALIGN_TOL, SolutionBundle

SECTIONS = ("space", "grid", "system", "solver", "analysis", "output")
FORMATS = ("csv", "json", "svg")


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split()]
    except ValueError as exc:
        raise ConfigError(f"{what}: expected numbers, got {text!r}") from exc


def _points(text: str, dim: int, what: str) -> np.ndarray:
    rows = [_floats(chunk, what) for chunk in text.split(";") if chunk.strip()]
    if not rows or any(len(r) != dim for r in rows):
        raise ConfigError(f"{what}: expected points with {dim} coordinates separated by ';'")
    return np.asarray(rows)


def _box(text: str, dim: int, what: str):
    parts = text.split("|")
    if len(parts) != 2:
        raise ConfigError(f"{what}: expected 'lo1 .. lon | hi1 .. hin'")
    lo, hi = _floats(parts[0], what), _floats(parts[1], what)
    if len(lo) != dim or len(hi) != dim:
        raise ConfigError(f"{what}: box corners need {dim} coordinates")
    return lo, hi


@dataclass
class RunConfig:
    text: str
    base: Path
    parser: configparser.ConfigParser
    seed_override: int | None = None
    formats_override: tuple | None = None
    notes: list = field(default_factory=list)

    @classmethod
    def load(cls, path, seed: int | None = None, formats=None) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        return cls.from_text(path.read_text(), path.resolve().parent, seed, formats)

    @classmethod
    def from_text(cls, text: str, base, seed: int | None = None, formats=None) -> "RunConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        unknown = set(parser.sections()) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
        cfg = cls(text, Path(base), parser, seed, tuple(formats) if formats else None)
        cfg.validate()
        return cfg

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def get(self, section: str, key: str, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return default

    def getfloat(self, section, key, default=None):
        v = self.get(section, key)
        if v is None:
            return default
        try:
            return float(v)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: expected a number, got {v!r}") from exc

    def getint(self, section, key, default=None):
        v = self.get(section, key)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: expected an integer, got {v!r}") from exc

    def getbool(self, section, key, default=False):
        if not self.parser.has_option(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: expected true or false") from exc

    def path(self, section, key) -> Path | None:
        v = self.get(section, key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base / p

    # validation

    def validate(self):
        kinds = [k for k in ("builtin", "field_table", "relation", "bundle") if self.get("system", k)]
        if len(kinds) != 1:
            raise ConfigError("[system] needs exactly one of builtin, field_table, relation, bundle")
        self.system_kind = kinds[0]
        if self.system_kind == "builtin" and self.get("system", "builtin") not in BUILTINS:
            raise ConfigError(f"unknown builtin system {self.get('system', 'builtin')!r}; choose from {sorted(BUILTINS)}")
        if self.system_kind != "builtin":
            p = self.path("system", self.system_kind)
            if not p.exists():
                raise ConfigError(f"[system] {self.system_kind} = {p} does not exist")
        if self.system_kind == "field_table" and not self.parser.has_section("space"):
            raise ConfigError("a field table needs a [space] section")
        law = self.get("solver", "law", "extreme")
        if law not in SELECTION_LAWS:
            raise ConfigError(f"[solver] law must be one of {SELECTION_LAWS}")
        dt = self.getfloat("solver", "dt")
        if dt is not None:
            if dt <= 0:
                raise ConfigError("[solver] dt must be positive")
            for key in ("t_minus", "t_plus"):
                t = self.getfloat("solver", key)
                if t is not None and abs(t / dt - round(t / dt)) > ALIGN_TOL:
                    raise ConfigError(f"[solver] {key} = {t} is not a multiple of dt = {dt}")
        seeds = self.get("solver", "seeds")
        if seeds is not None and not seeds.strip():
            raise ConfigError("[solver] seeds must not be empty")
        for fmt in self.formats:
            if fmt not in FORMATS:
                raise ConfigError(f"unknown output format {fmt!r}")

    @property
    def formats(self) -> tuple:
        if self.formats_override:
            return self.formats_override
        return tuple(self.get("output", "formats", "csv json").replace(",", " ").split())

    @property
    def seed(self) -> int:
        if self.seed_override is not None:
            return int(self.seed_override)
        return self.getint("solver", "seed", 0)

    # the system

    def _space(self) -> SpaceDescriptor | None:
        if not self.parser.has_section("space"):
            return None
        kind = self.get("space", "kind", "box")
        if kind == "finite":
            labels = self.get("space", "labels")
            if not labels:
                raise ConfigError("[space] a finite space needs labels")
            return SpaceDescriptor.finite(labels.split())
        bounds = self.get("space", "bounds")
        if not bounds:
            raise ConfigError("[space] bounds are required")
        pairs = [_floats(chunk, "[space] bounds") for chunk in bounds.split(",")]
        if any(len(p) != 2 for p in pairs):
            raise ConfigError("[space] bounds: expected 'lo hi' per dimension, separated by ','")
        try:
            return SpaceDescriptor(kind, tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))
        except ValueError as exc:
            raise ConfigError(f"[space] {exc}") from exc

    def _resolution(self, dim: int):
        res = self.get("grid", "resolution")
        if res is None:
            return None
        vals = [int(x) for x in res.split()]
        if len(vals) == 1:
            vals = vals * dim
        if len(vals) != dim:
            raise ConfigError(f"[grid] resolution needs {dim} entries")
        return tuple(vals)

    @cached_property
    def system(self) -> System | None:
        """The solver-backed system, or ``None`` for relation and bundle sources."""
        kind = self.system_kind
        if kind == "builtin":
            make = BUILTINS[self.get("system", "builtin")]
            sys = make()
            res = self._resolution(sys.grid.dim)
            if res is not None:
                sys = sys.with_(grid=Grid.over(sys.space, res if len(res) > 1 else res[0]))
        elif kind == "field_table":
            from .io import read_field_table

            space = self._space()
            res = self._resolution(space.dim)
            if res is None:
                raise ConfigError("[grid] resolution is required for a field table")
            grid = Grid.over(space, res)
            F = read_field_table(self.path("system", "field_table"), grid)
            sys = System(F.name, grid, self.getfloat("system", "relation_dt", 0.1), 1, 0.01, (0.0, 1.0), field=F)
        else:
            return None
        changes = {}
        for key, attr in (("relation_dt", "relation_dt"),):
            v = self.getfloat("system", key)
            if v is not None:
                changes[attr] = v
        inf = self.getint("system", "inflation")
        if inf is not None:
            changes["inflation"] = inf
        dt = self.getfloat("solver", "dt")
        if dt is not None:
            changes["solver_dt"] = dt
        t_minus = self.getfloat("solver", "t_minus")
        t_plus = self.getfloat("solver", "t_plus")
        if t_minus is not None or t_plus is not None:
            changes["horizon"] = (t_minus if t_minus is not None else sys.horizon[0], t_plus if t_plus is not None else sys.horizon[1])
        return sys.with_(**changes) if changes else sys

    @cached_property
    def source_bundle(self) -> SolutionBundle | None:
        if self.system_kind != "bundle":
            return None
        from .io import read_bundle

        return read_bundle(self.path("system", "bundle"))

    @property
    def grid(self) -> Grid:
        if self.system is not None:
            return self.system.grid
        if self.system_kind == "bundle":
            space = self._space() or self.source_bundle.space
            res = self._resolution(space.dim)
            if res is None:
                raise ConfigError("[grid] resolution is required for a bundle source")
            return Grid.over(space, res)
        return self.relation(1).grid

    def relation(self, threads: int = 1) -> CellRelation:
        if not hasattr(self, "_relation"):
            if self.system is not None:
                self._relation = self.system.relation(threads)
            elif self.system_kind == "relation":
                from .io import read_cell_relation

                self._relation = read_cell_relation(self.path("system", "relation"))
            else:
                s = self.source_bundle
                self._relation = build_cell_relation(s, self.grid, self.getfloat("system", "relation_dt", s.dt))
        return self._relation

    def policy(self) -> SelectionPolicy:
        return SelectionPolicy(seed=self.seed, dwell=self.getint("solver", "dwell", 5), law=self.get("solver", "law", "extreme"))

    def seeds(self):
        text = self.get("solver", "seeds", "centers")
        if text == "centers":
            return None
        return _points(text, self.grid.dim, "[solver] seeds")

    # analysis inputs

    def base_cells(self) -> list[int]:
        grid = self.grid
        cells = []
        pts = self.get("analysis", "points")
        if pts:
            cells += [grid.locate(p) for p in _points(pts, grid.dim, "[analysis] points")]
        raw = self.get("analysis", "cells")
        if raw:
            cells += [int(c) for c in raw.split()]
        for c in cells:
            if not 0 <= c < grid.n_cells:
                raise ConfigError(f"[analysis] cell {c} is not a cell of the grid")
        return cells

    def named_sets(self) -> dict:
        grid = self.grid
        out = {}
        raw = self.get("analysis", "sets")
        if not raw:
            return out
        for chunk in raw.split(";"):
            if not chunk.strip():
                continue
            if ":" not in chunk:
                raise ConfigError("[analysis] sets: expected 'name: lo | hi'")
            name, box = chunk.split(":", 1)
            lo, hi = _box(box, grid.dim, f"[analysis] set {name.strip()}")
            out[name.strip()] = CellSet.from_box(grid, lo, hi)
        return out

    def steps(self, default=(1,)) -> list[int]:
        raw = self.get("analysis", "steps")
        return [int(x) for x in raw.split()] if raw else list(default)
