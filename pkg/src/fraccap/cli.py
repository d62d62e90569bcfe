"""Command-line front end.

    fraccap <command> [--config FILE] [options]

Commands: capacity, convergence, bm, concavity, levelsets, extension.
Every option can also be given in a flat `key = value` config file (keys
are the long option names, with '-' or '_'); flags override file values and
unknown keys are errors.  Each run writes report.json plus CSV tables (first
line `# schema: ...`) and whitespace-separated .dat files into --out.

Exit codes: 0 success, 1 operational error, 2 mathematical finding
(bm: a VIOLATED deficit or an equality-probe TENSION; concavity: index above
the ceiling 1/(1-n); levelsets: nesting failure).
"""

from __future__ import annotations

import argparse
import datetime
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import brunn_minkowski as bm
from .analysis import concavity as cc
from .analysis import level_sets as ls
from .extension import level_body_capacity, make_extension_grid, solve_extension
from .io import FormatError, parse_body, parse_number_list, read_pairs, to_json, write_csv, write_dat
from .riesz import DEFAULT_DISCRETIZATION, KernelSpec, capacity, refine_study, solve_equilibrium

log = logging.getLogger("fraccap")

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Option:
    name: str
    kind: str  # float, int, floats, path, flag, choice
    default: object = None
    help: str = ""
    lo: float | None = None
    hi: float | None = None
    count: int | None = None  # exact list length
    choices: tuple = ()
    required: bool = False


COMMON = [
    Option("out", "str", "out", "output directory"),
    Option("seed", "int", 0, "random seed", 0, None),
    Option("no-timestamp", "flag", False, "omit the timestamp from report.json"),
    Option("verbose", "flag", False, "log progress to stderr"),
]

COMMANDS = {
    "capacity": [
        Option("body", "path", None, "body file", required=True),
        Option("cell-size", "float", 0.04, "cell size", 1e-4, None),
        Option("ladder", "floats", None, "optional refinement ladder, coarsest first"),
    ],
    "convergence": [
        Option("body", "path", None, "body file", required=True),
        Option("ladder", "floats", [0.08, 0.0566, 0.04, 0.0283], "cell sizes, coarsest first"),
    ],
    "bm": [
        Option("body1", "path", None, "first body file", required=True),
        Option("body2", "path", None, "second body file", required=True),
        Option("lambdas", "floats", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
               "lambda list or start:stop:step", 0.0, 1.0),
        Option("cell-size", "float", 0.0283, "finest cell size for body1", 1e-4, None),
        Option("levels", "int", 4, "ladder levels (cell-size * sqrt2^k)", 3, 8),
    ],
    "concavity": [
        Option("body", "path", None, "body file (or use --field)"),
        Option("field", "choice", None, "closed-form field instead of a body",
               choices=("inverse-distance", "gaussian", "constant")),
        Option("cell-size", "float", 0.04, "cell size", 1e-4, None),
        Option("shell", "floats", [1.2, 6.0], "radii in circumradius units (body) or absolute (field)",
               0.0, None, count=2),
        Option("bracket", "floats", [-8.0, 1.0], "beta bracket", -100.0, 1.0, count=2),
        Option("segments", "int", 4000, "number of random segments", 10, None),
        Option("width", "float", 1e-3, "final bracket width", 1e-8, 1.0),
    ],
    "levelsets": [
        Option("body", "path", None, "body file", required=True),
        Option("cell-size", "float", 0.04, "cell size", 1e-4, None),
        Option("levels", "floats", [0.2, 0.3, 0.5], "levels t", 0.0, 0.6),
        Option("scaling", "flag", False, "also measure cap(Omega(t)) t / cap(Omega)"),
        Option("pair", "floats", [0.3, 0.5], "levels r < s for the homothety test", 0.0, 0.6, count=2),
        Option("triple", "floats", [0.5, 0.25, 0.5], "r, s, lambda for the three-level test",
               0.0, 1.0, count=3),
    ],
    "extension": [
        Option("body", "path", None, "planar body file", required=True),
        Option("half-width", "float", None, "box half width L (default 4x circumradius)", 0.0, None),
        Option("spacing", "float", None, "grid spacing h (default inradius/10)", 0.0, None),
        Option("levels", "floats", [0.3, 0.5, 0.7], "levels r of {U >= r}", 0.0, 1.0),
        Option("cell-size", "float", 0.04, "cell size of the kernel-solver comparison", 1e-4, None),
    ],
}

CSV_DOCS = {
    "capacity": "capacity.csv: cell_size,nodes,mass,asymptotic,discrepancy; profile.dat: radius u u*r^(n-1)",
    "convergence": "convergence.csv: cell_size,nodes,mass,asymptotic,discrepancy",
    "bm": "bm.csv: lambda,capacity,capacity_bar,deficit,deficit_bar,class; bm.dat: lambda deficit bar",
    "concavity": "concavity.csv: beta,passed,worst,location",
    "levelsets": "levelsets.csv: t,convexity,circumradius[,capacity,ratio,ratio_bar]; levels.dat",
    "extension": "extension.csv: r,level_capacity,bar,predicted,relative_error",
}


class ConfigError(ValueError):
    pass


def _key(name: str) -> str:
    return name.replace("-", "_")


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting with argparse's status 2, which is reserved."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fraccap", description=__doc__.split("\n\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"fraccap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, opts in COMMANDS.items():
        sp = sub.add_parser(cmd, help=f"run the {cmd} job", epilog="outputs: " + CSV_DOCS[cmd])
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
        for o in opts + COMMON:
            flag = "--" + o.name
            if o.kind == "flag":
                sp.add_argument(flag, dest=_key(o.name), action="store_const", const=True, default=None,
                                help=o.help)
            else:
                sp.add_argument(flag, dest=_key(o.name), default=None, help=o.help)
    return p


def _convert(o: Option, raw, source: str):
    where = f"{source} '{o.name}'"
    try:
        if o.kind == "flag":
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("1", "true", "yes", "on"):
                return True
            if str(raw).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if o.kind == "int":
            v = int(raw)
        elif o.kind == "float":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError(raw)
        elif o.kind == "floats":
            v = parse_number_list(str(raw)) if isinstance(raw, str) else [float(x) for x in raw]
            if not v:
                raise ValueError(raw)
        elif o.kind == "choice":
            if raw not in o.choices:
                raise ConfigError(f"{where}: expected one of {', '.join(o.choices)}, got {raw!r}")
            return raw
        elif o.kind == "path":
            if not Path(raw).is_file():
                raise ConfigError(f"{where}: file not found: {raw}")
            return str(raw)
        else:
            return str(raw)
    except (ValueError, TypeError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{where}: cannot parse {raw!r} as {o.kind}") from None
    vals = v if isinstance(v, list) else [v]
    rng = f"[{'-inf' if o.lo is None else o.lo}, {'inf' if o.hi is None else o.hi}]"
    for x in vals:
        if (o.lo is not None and x < o.lo) or (o.hi is not None and x > o.hi):
            raise ConfigError(f"{where}: value {x} outside accepted range {rng}")
    if o.count is not None and len(vals) != o.count:
        raise ConfigError(f"{where}: expected {o.count} values, got {len(vals)}")
    return v


def parse_config(argv) -> dict:
    """Resolve defaults <- config file <- flags into one flat dict."""
    args = build_parser().parse_args(argv)
    cmd = args.command
    opts = {o.name: o for o in COMMANDS[cmd] + COMMON}
    by_key = {_key(n): o for n, o in opts.items()}
    cfg = {_key(n): o.default for n, o in opts.items()}
    if args.config:
        try:
            pairs = read_pairs(args.config)
        except FormatError as e:
            raise ConfigError(str(e)) from None
        for no, key, value in pairs:
            o = by_key.get(_key(key))
            if o is None:
                raise ConfigError(f"{args.config}:{no}: unknown key '{key}' for command {cmd} "
                                  f"(accepted: {', '.join(sorted(opts))})")
            cfg[_key(o.name)] = _convert(o, value, f"{args.config}:{no}: key")
    for key, o in by_key.items():
        raw = getattr(args, key)
        if raw is not None:
            cfg[key] = _convert(o, raw, "option")
    for n, o in opts.items():
        if o.required and cfg[_key(n)] is None:
            raise ConfigError(f"option '{n}' is required for {cmd}")
    if cmd == "concavity" and (cfg["body"] is None) == (cfg["field"] is None):
        raise ConfigError("concavity needs exactly one of 'body' or 'field'")
    if cmd == "bm" and any(not 0 < x < 1 for x in cfg["lambdas"]):
        raise ConfigError("option 'lambdas': values must lie strictly inside (0, 1)")
    for k in ("ladder",):
        if cfg.get(k) is not None:
            lad = cfg[k]
            if len(lad) < 3 or any(b >= a for a, b in zip(lad, lad[1:])):
                raise ConfigError(f"option '{k}': need >= 3 strictly decreasing cell sizes, got {lad}")
    cfg = {"command": cmd, **cfg}
    if args.config:
        cfg["config_file"] = args.config
    cfg["print_config"] = args.print_config
    return cfg


# ------------------------------------------------------------------ jobs


def _table_rows(t):
    return [list(r) for r in t.rows()]


def _table_json(t):
    return {"rows": _table_rows(t), "order": t.order, "extrapolated": t.extrapolated,
            "error_bar": t.error_bar, "extrapolated_asymptotic": t.extrapolated_asymptotic,
            "stability": t.stability}


def _profile(sol, K):
    R = K.circumradius()
    radii = R * np.geomspace(1.5, 64, 24)
    return [row[:3] for row in ls.ball_profile(sol, K.center(), R, radii)]


def job_capacity(cfg, out: Path):
    K = parse_body(cfg["body"])
    est = capacity(K, cfg["cell_size"], keep_solution=True)
    res = {"mass": est.mass_estimate, "asymptotic": est.asymptotic_estimate,
           "discrepancy": est.discrepancy, "cell_size": est.resolution, "nodes": est.nodes,
           "residual_max": est.solution.residual_max, "negative_count": est.solution.negative_count}
    rows = [[est.resolution, est.nodes, est.mass_estimate, est.asymptotic_estimate, est.discrepancy]]
    if cfg["ladder"]:
        t = refine_study(K, cfg["ladder"])
        res["convergence"] = _table_json(t)
        rows = _table_rows(t)
    write_csv(out / "capacity.csv", f"fraccap.capacity/{SCHEMA_VERSION}",
              ["cell_size", "nodes", "mass", "asymptotic", "discrepancy"], rows)
    write_dat(out / "profile.dat", "radius u u*r^(n-1)", _profile(est.solution, K))
    return res, 0


def job_convergence(cfg, out: Path):
    K = parse_body(cfg["body"])
    t = refine_study(K, cfg["ladder"])
    write_csv(out / "convergence.csv", f"fraccap.convergence/{SCHEMA_VERSION}",
              ["cell_size", "nodes", "mass", "asymptotic", "discrepancy"], _table_rows(t))
    write_dat(out / "convergence.dat", "cell_size mass asymptotic",
              [[r[0], r[2], r[3]] for r in t.rows()])
    return {"convergence": _table_json(t)}, 0


def job_bm(cfg, out: Path):
    K1, K2 = parse_body(cfg["body1"]), parse_body(cfg["body2"])
    rep = bm.bm_sweep(K1, K2, cfg["lambdas"], cells=bm.ladder(cfg["cell_size"], cfg["levels"]))
    rows = [[lam, c.value, c.bar, d, b, k] for lam, c, d, b, k in
            zip(rep.lambdas, rep.capacities, rep.deficits, rep.bars, rep.classes)]
    write_csv(out / "bm.csv", f"fraccap.bm/{SCHEMA_VERSION}",
              ["lambda", "capacity", "capacity_bar", "deficit", "deficit_bar", "class"], rows)
    write_dat(out / "bm.dat", "lambda deficit bar", [[r[0], r[3], r[4]] for r in rows])
    res = {"cells": rep.cells, "cap1": [rep.cap1.value, rep.cap1.bar],
           "cap2": [rep.cap2.value, rep.cap2.bar],
           "homothety": {"rho": rep.homothety.rho, "xi": rep.homothety.xi,
                         "residual": rep.homothety.residual,
                         "relative_residual": rep.homothety.residual / rep.homothety.scale},
           "sweep": [dict(zip(["lambda", "capacity", "capacity_bar", "deficit", "deficit_bar",
                               "class"], r)) for r in rows]}
    code = 2 if bm.VIOLATED in rep.classes else 0
    if 0.5 in rep.lambdas:
        k = rep.lambdas.index(0.5)
        probe = bm.equality_classification(rep.homothety, rep.deficits[k], rep.bars[k])
        res["equality_probe"] = {"classification": probe.classification,
                                 "homothetic": probe.homothetic, "advice": probe.advice}
        if probe.classification == bm.TENSION:
            code = 2
    return res, code


CLOSED_FORMS = {
    "inverse-distance": lambda p: 1.0 / np.linalg.norm(p, axis=1),
    "gaussian": lambda p: np.exp(-np.sum(p * p, axis=1)),
    "constant": lambda p: np.ones(len(p)),
}


def job_concavity(cfg, out: Path):
    if cfg["field"]:
        lo, hi = cfg["shell"]
        rep = cc.concavity_index(CLOSED_FORMS[cfg["field"]], cc.Region(np.zeros(2), lo, hi),
                                 cfg["bracket"], cfg["segments"], cfg["seed"], width=cfg["width"])
    else:
        K = parse_body(cfg["body"])
        rep = cc.body_concavity_experiment(K, cfg["cell_size"], cfg["shell"],
                                           n_segments=cfg["segments"], seed=cfg["seed"],
                                           beta_bracket=cfg["bracket"], width=cfg["width"])
    rows = [[v.beta, int(v.passed), v.worst, ";".join(format(x, ".17g") for x in v.location)]
            for v in rep.verdicts]
    write_csv(out / "concavity.csv", f"fraccap.concavity/{SCHEMA_VERSION}",
              ["beta", "passed", "worst", "location"], rows)
    res = {"alpha": rep.alpha, "bracket": [rep.beta_lo, rep.beta_hi], "ceiling": rep.ceiling,
           "gap": rep.gap, "below_bracket": rep.below_bracket, "segments": rep.n_segments,
           "seed": rep.seed, "region": rep.region}
    code = 2 if rep.ceiling is not None and rep.beta_lo > rep.ceiling + cfg["width"] else 0
    return res, code


def job_levelsets(cfg, out: Path):
    K = parse_body(cfg["body"])
    h = cfg["cell_size"]
    levels = sorted(cfg["levels"])
    sol = solve_equilibrium(DEFAULT_DISCRETIZATION.rasterize(K, h), KernelSpec.fractional(K.dim))
    sets = ls.extract_levels(sol, K, levels)
    nested = all(ls.is_nested(a, b) for a, b in zip(sets, sets[1:]))
    rows = [[s.t, s.convexity, s.body.circumradius()] for s in sets]
    res = {"levels": levels, "convexity": [s.convexity for s in sets], "nested": nested}
    cols = ["t", "convexity", "circumradius"]
    if cfg["scaling"]:
        rep = ls.level_scaling_experiment(K, levels, h)
        for r, c, q, b in zip(rows, rep.level_capacities, rep.ratios, rep.ratio_bars):
            r += [c.value, q, b]
        cols += ["capacity", "ratio", "ratio_bar"]
        res["scaling"] = {"base": [rep.capacity.value, rep.capacity.bar],
                          "ratios": rep.ratios, "ratio_bars": rep.ratio_bars}
        write_dat(out / "levels.dat", "t ratio bar",
                  [[t, q, b] for t, q, b in zip(levels, rep.ratios, rep.ratio_bars)])
    r_, s_ = cfg["pair"]
    hom = ls.homothetic_levels_experiment(K, min(r_, s_), max(r_, s_), h)
    fit = hom.fits[0]
    res["homothety"] = {"r": min(r_, s_), "s": max(r_, s_), "rho": fit.rho, "xi": fit.xi,
                        **hom.extra}
    r3, s3, lam = cfg["triple"]
    tri = ls.three_levels_experiment(K, r3, s3, lam, h)
    res["three_levels"] = tri.extra
    write_csv(out / "levelsets.csv", f"fraccap.levelsets/{SCHEMA_VERSION}", cols, rows)
    return res, 0 if nested else 2


def job_extension(cfg, out: Path):
    K = parse_body(cfg["body"])
    grid = make_extension_grid(K, cfg["half_width"], cfg["spacing"])
    sol = solve_extension(K, grid)
    riesz = capacity(K, cfg["cell_size"]).mass_estimate
    rows = []
    for r in cfg["levels"]:
        c0, bar, _ = level_body_capacity(sol, r)
        pred = sol.capacity_estimate / r
        rows.append([r, c0, bar, pred, c0 / pred - 1])
    write_csv(out / "extension.csv", f"fraccap.extension/{SCHEMA_VERSION}",
              ["r", "level_capacity", "bar", "predicted", "relative_error"], rows)
    res = {"half_width": grid.half_width, "spacing": grid.spacing,
           "extension_capacity": sol.capacity_estimate, "riesz_capacity": riesz,
           "relative_difference": sol.capacity_estimate / riesz - 1,
           "residual": sol.residual, "iterations": sol.iterations,
           "levels": [dict(zip(["r", "level_capacity", "bar", "predicted", "relative_error"], r))
                      for r in rows]}
    return res, 0


JOBS = {"capacity": job_capacity, "convergence": job_convergence, "bm": job_bm,
        "concavity": job_concavity, "levelsets": job_levelsets, "extension": job_extension}


def run(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    result, code = JOBS[cfg["command"]](cfg, out)
    report = {"tool": "fraccap", "version": __version__,
              "config": {k: v for k, v in cfg.items() if k != "print_config"},
              "seed": cfg["seed"], "result": result, "exit_code": code}
    if not cfg["no_timestamp"]:
        report["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    (out / "report.json").write_text(to_json(report) + "\n")
    return code


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as e:
        print(f"fraccap: error: {e}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if cfg["verbose"] else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if cfg["print_config"]:
        print(to_json({k: v for k, v in cfg.items() if k != "print_config"}))
        return 0
    try:
        return run(cfg)
    except (FormatError, ValueError, RuntimeError, OSError) as e:
        print(f"fraccap: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
