"""Command-line front end.

``ydyn COMMAND --config run.ini --out DIR`` runs one analysis and writes its
artifacts plus ``manifest.json`` (config text and hash, seed, formats,
version, artifact checksums) into ``DIR``.  ``ydyn rerun DIR/manifest.json``
repeats the run.  ``ydyn plot ARTIFACT`` renders an artifact to SVG.

Exit codes: 0 when every verdict passes, 1 when one fails, 2 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, EmptySolutionError, PlotError, YdynError
from .io import dumps_json, format_cell_relation, grid_from_dict, grid_to_dict, read_bundle, read_json, read_measure, write_bundle
from .limits import check_theorem_B, omega_limit_grid, recurrent_cells, strong_invariance_grid
from .measures import (
    check_strict_invariance,
    check_subinvariance,
    default_family,
    dyadic_arcs,
    krylov_bogoliubov,
    poincare_check,
    random_sets,
    theorem_D_check,
)
from .phase_space import CellSet, DiscreteMeasure
from .relation import markov_measure
from .semigroup import check_semigroup, reach_set, viability_kernel
from .trajectory import check_axioms

COMMANDS = ("simulate", "reach", "invariance", "limits", "measure", "recurrence", "check")


class Run:
    """Collects artifacts in declared order and tracks verdicts."""

    def __init__(self, cfg, command: str, out: Path, threads: int):
        self.cfg = cfg
        self.command = command
        self.out = out
        self.threads = threads
        self.artifacts: list[Path] = []
        self.failures: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    @property
    def formats(self):
        return self.cfg.formats

    def _record(self, path: Path):
        self.artifacts.append(path)

    def text(self, name: str, content: str):
        path = self.out / name
        path.write_text(content)
        self._record(path)

    def json(self, name: str, obj):
        if "json" in self.formats:
            self.text(name, dumps_json(obj))

    def csv(self, name: str, header: str, rows):
        if "csv" in self.formats:
            self.text(name, "\n".join([header] + [",".join(str(x) for x in r) for r in rows]) + "\n")

    def figure(self, name: str, draw, *args, **kw):
        if "svg" in self.formats:
            path = self.out / name
            draw(*args, path=path, **kw)
            self._record(path)

    def verdict(self, label: str, ok: bool | None):
        word = "PASS" if ok else ("SKIP" if ok is None else "FAIL")
        print(f"{word} {label}")
        if ok is False:
            self.failures.append(label)

    def finish(self) -> int:
        code = 1 if self.failures else 0
        manifest = {
            "command": self.command,
            "version": __version__,
            "config_hash": self.cfg.digest,
            "config_text": self.cfg.text,
            "config_base": str(self.cfg.base),
            "seed": self.cfg.seed,
            "formats": list(self.formats),
            "grid": grid_to_dict(self.cfg.grid),
            "exit_code": code,
            "artifacts": [
                {"path": p.relative_to(self.out).as_posix(), "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}
                for p in self.artifacts
            ],
        }
        (self.out / "manifest.json").write_text(dumps_json(manifest))
        return code


def _plotting():
    from . import plotting

    return plotting


def _cellsets(sets: dict) -> dict:
    return {name: cs.indices() for name, cs in sets.items()}


# subcommands

def cmd_simulate(run: Run):
    cfg = run.cfg
    sys_ = cfg.system
    if sys_ is None:
        raise ConfigError("simulate needs a builtin or field-table system")
    s = sys_.bundle(seeds=cfg.seeds(), n_per_seed=cfg.getint("solver", "n_per_seed", 2), policy=cfg.policy(), threads=run.threads)
    paths = write_bundle(s, run.out / "bundle")
    for p in paths:
        run._record(p)
    exited = sum(1 for phi in s if "exited" in phi.provenance)
    run.json("simulate.json", {"members": len(s), "dt": s.dt, "horizon": list(sys_.horizon), "exited": exited, "provenance": dict(s.provenance)})
    plot = _plotting()
    run.figure("bundle.svg", plot.plot_bundle, s)
    if s.space.dim == 2:
        run.figure("bundle_time.svg", plot.plot_bundle, s, against_time=True)
    print(f"simulated {len(s)} trajectories ({exited} left the space)")


def _base_set(run: Run) -> CellSet:
    grid = run.cfg.grid
    base = CellSet.from_indices(grid, run.cfg.base_cells())
    for cs in run.cfg.named_sets().values():
        base = base | cs
    if base.is_empty:
        raise ConfigError("[analysis] points, cells or sets are required")
    return base


def cmd_reach(run: Run):
    v = run.cfg.relation(run.threads)
    base = _base_set(run)
    steps = run.cfg.steps((1, 5, 10))
    sets = {f"t={k * v.dt:g}": reach_set(v, base, k) for k in steps}
    run.json("reach.json", {
        "grid": grid_to_dict(v.grid),
        "dt": v.dt,
        "base": base.indices(),
        "steps": {str(k): reach_set(v, base, k).indices() for k in steps},
        "cellsets": _cellsets({"base": base, **sets}),
    })
    run.csv("reach.csv", "step,cell", [(k, c) for k in steps for c in reach_set(v, base, k)])
    run.figure("reach.svg", _plotting().plot_cells, {"base": base, **sets})
    for k in steps:
        print(f"step {k}: {len(reach_set(v, base, k))} cells")


def cmd_invariance(run: Run):
    v = run.cfg.relation(run.threads)
    run.text("relation.txt", format_cell_relation(v))
    sets = {"grid": CellSet.full(v.grid), **run.cfg.named_sets()}
    rows, report, draw = [], {}, {}
    for name, a in sets.items():
        kernel = viability_kernel(v, a)
        weak = kernel == a
        strong = strong_invariance_grid(v, a)
        report[name] = {"cells": a.indices(), "kernel": kernel.indices(), "weakly_invariant": weak, "strongly_invariant": strong}
        rows += [(name, c) for c in kernel]
        draw[f"kernel of {name}"] = kernel
        print(f"{name}: kernel {len(kernel)} of {len(a)} cells, weak {weak}, strong {strong}")
    run.json("invariance.json", {"grid": grid_to_dict(v.grid), "sets": report, "cellsets": _cellsets(draw)})
    run.csv("invariance.csv", "set,cell", rows)
    run.figure("invariance.svg", _plotting().plot_cells, draw)


def cmd_limits(run: Run):
    cfg = run.cfg
    v = cfg.relation(run.threads)
    cells = cfg.base_cells()
    if not cells:
        raise ConfigError("[analysis] points or cells are required for limits")
    two_sided = cfg.getbool("analysis", "two_sided", True)
    reports, rows, draw = [], [], {}
    for x in cells:
        try:
            rep = omega_limit_grid(v, x, cfg.getint("analysis", "n_max"), cfg.getint("analysis", "inflation"), two_sided)
        except EmptySolutionError as exc:
            raise ConfigError(f"{exc}; set two_sided = false for forward-only limits") from exc
        reports.append(rep.to_dict())
        rows += [(x, "omega", c) for c in rep.omega] + [(x, "alpha", c) for c in rep.alpha]
        draw[f"omega({x})"] = rep.omega
        if not rep.alpha.is_empty:
            draw[f"alpha({x})"] = rep.alpha
        run.verdict(f"limit sets of cell {x} weakly invariant (inflation {rep.inflation}, {len(rep.omega)} omega cells)", rep.weak_invariant)
    run.json("limits.json", {"grid": grid_to_dict(v.grid), "reports": reports, "cellsets": _cellsets(draw)})
    run.csv("limits.csv", "base_cell,kind,cell", rows)
    run.figure("limits.svg", _plotting().plot_cells, draw)


def _measure(run: Run, v) -> DiscreteMeasure:
    cfg = run.cfg
    kind = cfg.get("analysis", "measure", "uniform")
    grid = v.grid
    if kind == "uniform":
        return DiscreteMeasure.uniform(grid)
    if kind == "uniform_on":
        raw = cfg.get("analysis", "measure_box")
        if not raw:
            raise ConfigError("[analysis] measure_box is required for measure = uniform_on")
        from .config import _box

        lo, hi = _box(raw, grid.dim, "[analysis] measure_box")
        cells = CellSet.from_box(grid, lo, hi)
        if cells.is_empty:
            raise ConfigError("[analysis] measure_box meets no cell")
        return DiscreteMeasure.uniform_on(cells)
    if kind == "krylov":
        start = cfg.base_cells()
        if not start:
            raise ConfigError("[analysis] points or cells give the starting cell for measure = krylov")
        return krylov_bogoliubov(v, start[0], cfg.getint("analysis", "krylov_T", 1000))
    if kind == "markov":
        r = v.to_relation()
        core = r.core()
        return markov_measure(r, {(i, j): 1.0 for i, j in r.edges if i in core and j in core})
    raise ConfigError(f"unknown measure {kind!r}")


def _family(run: Run, grid):
    cfg = run.cfg
    if cfg.get("analysis", "family", "default") == "arcs":
        return dyadic_arcs(grid), "dyadic arcs"
    n = cfg.getint("analysis", "random_sets", 100)
    return default_family(grid, cfg.seed, n), f"single cells, dyadic boxes, {n} random sets"


def _strict(run: Run, mu, v):
    names = (run.cfg.get("analysis", "strict_sets") or "").split()
    if not names:
        return None
    sets = run.cfg.named_sets()
    missing = [n for n in names if n not in sets]
    if missing:
        raise ConfigError(f"[analysis] strict_sets names unknown set(s): {', '.join(missing)}")
    steps = [int(x) for x in (run.cfg.get("analysis", "strict_steps") or "1").split()]
    rep = check_strict_invariance(mu, v, [sets[n] for n in names], steps, run.cfg.getfloat("analysis", "tolerance", 1e-9), " ".join(names))
    for item in rep.strict_violations:
        item["set"] = names[item["set"]]
    print(f"strict invariance: {len(rep.strict_violations)} violation(s), largest {rep.max_violation:.6g}")
    return rep.to_dict()


def cmd_measure(run: Run):
    v = run.cfg.relation(run.threads)
    mu = _measure(run, v)
    family, desc = _family(run, v.grid)
    tol = run.cfg.getfloat("analysis", "tolerance", 1e-9)
    rep = check_subinvariance(mu, v, family, run.cfg.steps((1,)), tol, desc)
    out = rep.to_dict()
    out["strict"] = _strict(run, mu, v)
    out["grid"] = grid_to_dict(v.grid)
    run.csv("measure.csv", "cell,weight", [(i, repr(float(w))) for i, w in enumerate(mu.weights)])
    run.json("measure_report.json", out)
    run.figure("measure.svg", _plotting().plot_measure, mu)
    run.verdict(f"sub-invariance over {rep.pairs_tested} pairs (max violation {rep.max_violation:.3g})", rep.passed)


def cmd_recurrence(run: Run):
    cfg = run.cfg
    v = cfg.relation(run.threads)
    mu = _measure(run, v)
    tol = cfg.getfloat("analysis", "tolerance", 1e-9)
    rec = recurrent_cells(v, cfg.getint("analysis", "n_max"))
    d_ok = theorem_D_check(mu, rec, cfg.getint("analysis", "inflation", 0) or 0, tol)
    rng = np.random.default_rng(cfg.seed)
    named = cfg.named_sets()
    tests = {**named, **{f"random_{k}": b for k, b in enumerate(random_sets(v.grid, rng, cfg.getint("analysis", "random_sets", 20)))}}
    poincare = {}
    bad = 0
    for name, b in tests.items():
        verdict = poincare_check(mu, v, b, cfg.getint("analysis", "n_max"), tol)
        poincare[name] = {k: val for k, val in verdict.to_dict().items() if k != "B_infinity"}
        bad += verdict.holds is False
    run.verdict(f"recurrent cells carry full mass ({len(rec)} cells)", d_ok)
    run.verdict(f"return sets hold full mass for {len(tests)} sets", bad == 0)
    report = {
        "grid": grid_to_dict(v.grid),
        "recurrence": {"recurrent_cells": rec.indices(), "full_measure": d_ok},
        "poincare": poincare,
        "strict": _strict(run, mu, v),
        "cellsets": {"recurrent": rec.indices(), "support": mu.support().indices()},
    }
    run.json("recurrence.json", report)
    run.figure("recurrence.svg", _plotting().plot_cells, {"recurrent": rec, "support": mu.support()})


def cmd_check(run: Run):
    cfg = run.cfg
    tol = cfg.getfloat("analysis", "tolerance", 1e-9)
    report = {}
    bundle = None
    sys_ = cfg.system
    if sys_ is not None:
        bundle = sys_.bundle(seeds=cfg.seeds(), n_per_seed=cfg.getint("solver", "n_per_seed", 2), policy=cfg.policy(), threads=run.threads)
        window = sys_.horizon
        bound = cfg.getfloat("solver", "lipschitz_bound", sys_.speed_bound)
    elif cfg.source_bundle is not None:
        bundle = cfg.source_bundle
        window = (cfg.getfloat("solver", "t_minus", max(p.t_start for p in bundle)), cfg.getfloat("solver", "t_plus", min(p.t_end for p in bundle)))
        bound = cfg.getfloat("solver", "lipschitz_bound")
    if bundle is not None:
        ax = check_axioms(bundle, cfg.grid, window, tol, bound, cfg.seed)
        report["axioms"] = ax.to_dict()
        run.verdict(f"compactness witness (modulus {ax.lipschitz_modulus:.6g} vs reference {ax.lipschitz_reference:.6g})", ax.compactness_pass)
        run.verdict(f"existence coverage {ax.existence_coverage:.3f}", ax.existence_pass)
        run.verdict(f"shift closure coverage {ax.shift_closure_coverage:.3f}", ax.shift_closure_pass)
    v = cfg.relation(run.threads)
    rng = np.random.default_rng(cfg.seed)
    steps = [k for k in cfg.steps((1, 2, 3)) if k >= 0] or [1]
    sg = []
    for e in random_sets(v.grid, rng, 5):
        for s in steps:
            for t in steps:
                sg.append(check_semigroup(v, e, s, t))
    sg_ok = all(r.passed for r in sg)
    report["semigroup"] = {"checks": len(sg), "passed": sg_ok}
    run.verdict(f"semigroup law and back-forth inclusion ({len(sg)} checks)", sg_ok)
    core = v.core().indices()
    picks = sorted(rng.choice(core, size=min(10, len(core)), replace=False).tolist()) if core else []
    thb = {x: check_theorem_B(v, x, cfg.getint("analysis", "n_max"), cfg.getint("analysis", "inflation")) for x in picks}
    report["limit_sets_invariant"] = {str(x): ok for x, ok in thb.items()}
    run.verdict(f"limit sets weakly invariant at {len(thb)} core cells", all(thb.values()) if thb else None)
    report["passed"] = not run.failures
    report["grid"] = grid_to_dict(v.grid)
    run.json("check.json", report)


# plot and rerun

def _grid_for(artifact: Path, config):
    from .config import RunConfig

    if config:
        return RunConfig.load(config).grid
    for cand in (artifact.parent / "manifest.json", artifact / "manifest.json"):
        if cand.is_file():
            data = read_json(cand)
            if "grid" in data:
                return grid_from_dict(data["grid"])
    raise ConfigError(f"no grid known for {artifact}; pass --config")


def cmd_plot(args) -> int:
    plot = _plotting()
    artifact = Path(args.artifact)
    if not artifact.exists():
        raise ConfigError(f"artifact {artifact} does not exist")
    dims = tuple(int(x) for x in args.project.split(",")) if args.project else None
    out = Path(args.out) if args.out else artifact.parent
    out.mkdir(parents=True, exist_ok=True)
    stem = artifact.name if artifact.is_dir() else artifact.stem
    target = out / f"{stem}.svg"
    if artifact.is_dir():
        plot.plot_bundle(read_bundle(artifact), target, dims, against_time=args.time)
    elif artifact.suffix == ".csv" and artifact.read_text().startswith("cell,weight"):
        plot.plot_measure(read_measure(artifact, _grid_for(artifact, args.config)), target, dims)
    elif artifact.suffix == ".json":
        data = read_json(artifact)
        if "cellsets" not in data or "grid" not in data:
            raise ConfigError(f"{artifact} carries no cell sets to draw")
        grid = grid_from_dict(data["grid"])
        sets = {k: CellSet.from_indices(grid, v) for k, v in data["cellsets"].items()}
        plot.plot_cells(sets, target, dims)
    else:
        raise ConfigError(f"do not know how to draw {artifact}")
    print(target)
    return 0


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("YDYN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"YDYN_THREADS must be an integer, got {env!r}") from exc
    return 1


HANDLERS = {
    "simulate": cmd_simulate,
    "reach": cmd_reach,
    "invariance": cmd_invariance,
    "limits": cmd_limits,
    "measure": cmd_measure,
    "recurrence": cmd_recurrence,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ydyn", description="Set-valued dynamics: relations, limit sets, invariant measures.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    run_opts = argparse.ArgumentParser(add_help=False)
    run_opts.add_argument("--config", required=True, help="INI run configuration")
    run_opts.add_argument("--out", help="output directory (default: [output] dir, else ./ydyn-out)")
    run_opts.add_argument("--seed", type=int, help="override [solver] seed")
    run_opts.add_argument("--threads", type=int, help="worker threads (default: YDYN_THREADS, else 1)")
    run_opts.add_argument("--format", action="append", choices=("csv", "json", "svg"), help="artifact formats; repeat for several")

    helps = {
        "simulate": "sample solutions and write the bundle",
        "reach": "reach sets of the configured cells",
        "invariance": "viability kernels and weak/strong invariance",
        "limits": "omega and alpha limit sets",
        "measure": "construct a measure and check sub-invariance",
        "recurrence": "return sets and full mass of recurrent cells",
        "check": "axiom diagnostics, semigroup law and limit-set checks",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[run_opts], help=helps[name])

    p = sub.add_parser("plot", help="render an artifact to SVG")
    p.add_argument("artifact")
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--project", help="coordinates to draw, e.g. 0,2")
    p.add_argument("--time", action="store_true", help="draw a coordinate against time (bundles)")
    p.add_argument("--threads", type=int)

    p = sub.add_parser("rerun", help="repeat the run recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.add_argument("--threads", type=int)
    return parser


def main(argv=None) -> int:
    from .config import RunConfig

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = _threads(args)
        if args.command == "plot":
            return cmd_plot(args)
        if args.command == "rerun":
            path = Path(args.manifest)
            if not path.is_file():
                raise ConfigError(f"manifest {path} does not exist")
            m = json.loads(path.read_text())
            cfg = RunConfig.from_text(m["config_text"], m["config_base"], m["seed"], m["formats"])
            command = m["command"]
            out = Path(args.out) if args.out else path.parent
        else:
            cfg = RunConfig.load(args.config, args.seed, args.format)
            command = args.command
            out = Path(args.out) if args.out else cfg.path("output", "dir") or Path("ydyn-out")
        run = Run(cfg, command, out, threads)
        HANDLERS[command](run)
        return run.finish()
    except (ConfigError, PlotError) as exc:
        print(f"ydyn: error: {exc}", file=sys.stderr)
        return 2
    except YdynError as exc:
        print(f"ydyn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
