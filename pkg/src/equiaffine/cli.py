"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 geometric degeneracy
(critical or degenerate points, failed calibration).
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import __version__, exprlang, flow, invariants, ruled, verification
from .errors import (
    CalibrationError,
    CriticalPointError,
    DegenerateError,
    EquiaffineError,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEGENERATE = 2

SAMPLE_TOL = 1e-9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    builtin: str | None = None
    params: list = field(default_factory=list)
    expr: str | None = None
    vars: list | None = None
    points: list = field(default_factory=list)
    seed: int = 0
    tol_regular: float = invariants.TOL_REGULAR
    tol_nondegen: float = invariants.TOL_NONDEGEN
    fmt: str = "json"
    out: str | None = None
    suite: str | None = None
    t: float = 0.0
    grid: tuple = (50, 50)
    steps: int = 100
    t_end: float = 1.0
    exact: bool = False
    s_range: float = 2.0

    def field(self):
        if self.expr is not None:
            return exprlang.from_expression(self.expr, self.vars or exprlang.infer_var_names(self.expr))
        return exprlang.builtin(self.builtin, *self.params)


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _grid(text):
    parts = text.lower().split("x")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 50x50, got {text!r}") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"grid must be two positive counts, got {text!r}")
    return vals


def _add_source(p):
    g = p.add_argument_group("field source (exactly one)")
    g.add_argument("--builtin", help="builtin field tag, e.g. helicoid3, genhel, symdet")
    g.add_argument("--param", action="append", default=[], help="builtin parameter (repeatable)")
    g.add_argument("--expr", help="field expression")
    g.add_argument("--vars", help="comma-separated variable names for --expr")


def _add_points(p):
    p.add_argument("--point", action="append", default=[],
                   help="comma-separated coordinates, or E0, E1, ... for symdet idempotents")
    p.add_argument("--points-file", help="file with one comma-separated point per line")


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="random seed (falls back to $EQA_SEED, then 0)")
    p.add_argument("--tol-regular", type=_positive, default=invariants.TOL_REGULAR)
    p.add_argument("--tol-nondegen", type=_positive, default=invariants.TOL_NONDEGEN)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write output to this file instead of stdout")


def build_parser():
    parser = _Parser(prog="equiaffine", description="Equiaffine invariants of level sets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("invariants", help="analyze a field at points")
    _add_source(p)
    _add_points(p)
    _add_common(p)

    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument("--suite", default="all", help=f"one of {', '.join(verification.SUITES)}")
    _add_common(p)
    p.set_defaults(format="table")
    for a in p._actions:
        if a.dest == "format":
            a.choices = ("table", "json", "csv")

    p = sub.add_parser("sample", help="point cloud on a level set of a ruled field")
    _add_source(p)
    p.add_argument("--t", type=float, default=0.0, help="level value")
    p.add_argument("--grid", type=_grid, default=(50, 50), help="points per r axis x points per s axis")
    p.add_argument("--s-range", type=_positive, default=2.0, help="s coordinates span [-s, s]")
    _add_common(p)

    p = sub.add_parser("flow", help="integrate the affine normal flow")
    _add_source(p)
    _add_points(p)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--exact", action="store_true", help="compare with the closed-form flow (ruled fields)")
    _add_common(p)
    return parser


def _expand_point(token, cfg):
    token = token.strip()
    if token[:1] in "Ee" and token[1:].isdigit():
        if cfg.builtin not in ("symdet", "cheng_yau_det"):
            raise UsageError(f"point token {token} needs --builtin symdet or cheng_yau_det")
        n = int(cfg.params[0]) if cfg.params else 2
        p = int(token[1:])
        if not 0 <= 2 * p <= n:
            raise UsageError(f"E{p} is not defined for n = {n}")
        return exprlang.symdet_idempotent(n, p)
    try:
        return np.array([float(v) for v in token.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse point {token!r}") from None


def _read_points_file(path, cfg):
    pts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                pts.append(np.array([float(v) for v in line.split(",")]))
            except ValueError:
                if pts:
                    raise UsageError(f"cannot parse point line {line!r}") from None
                # header row
    return pts


def config_from_args(args):
    seed = args.seed
    if seed is None:
        env = os.environ.get("EQA_SEED")
        try:
            seed = int(env) if env else 0
        except ValueError:
            raise UsageError(f"EQA_SEED must be an integer, got {env!r}") from None
    cfg = RunConfig(command=args.command, seed=seed, tol_regular=args.tol_regular,
                    tol_nondegen=args.tol_nondegen, fmt=args.format, out=args.out)
    if hasattr(args, "builtin"):
        if (args.builtin is None) == (args.expr is None):
            raise UsageError("give exactly one of --builtin or --expr")
        if args.vars is not None and args.expr is None:
            raise UsageError("--vars only applies to --expr")
        if args.param and args.builtin is None:
            raise UsageError("--param only applies to --builtin")
        cfg.builtin, cfg.params, cfg.expr = args.builtin, list(args.param), args.expr
        cfg.vars = [v.strip() for v in args.vars.split(",")] if args.vars else None
    if hasattr(args, "point"):
        cfg.points = [_expand_point(tok, cfg) for tok in args.point]
        if args.points_file:
            cfg.points += _read_points_file(args.points_file, cfg)
    for name in ("suite", "t", "grid", "steps", "t_end", "exact", "s_range"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    return cfg


@contextmanager
def _output(cfg):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _check_dim(fld, points):
    for p in points:
        if p.size != fld.dim:
            raise UsageError(f"point {p.tolist()} has {p.size} coordinates; the field has {fld.dim}")


# commands

INVARIANT_CSV = ("F", "H", "Ucal", "kappa_eq", "gauss_kronecker", "regular_point", "nondegenerate")


REPORT_KEYS = ("point", "F", "dF", "H", "Ucal", "N", "k", "k_inertia", "mu", "nm", "rho", "S",
               "kappa_eq", "gauss_kronecker")


def critical_record(fld, point, message):
    """Report for a point where dF = 0: only the point and F are meaningful."""
    rec = dict.fromkeys(REPORT_KEYS)
    rec["point"] = [float(x) for x in point]
    try:
        rec["F"] = float(fld.value(point))
    except EquiaffineError:
        pass
    rec["flags"] = {"regular_point": False, "nondegenerate": False, "Ucal_sign": 0, "jet_order": None}
    rec["diagnostics"] = {"error": message}
    return rec


def cmd_invariants(cfg):
    fld = cfg.field()
    if not cfg.points:
        raise UsageError("give at least one --point or --points-file")
    _check_dim(fld, cfg.points)
    records = []
    code = EXIT_OK
    for p in cfg.points:
        try:
            rep = invariants.analyze(fld, p, cfg.tol_regular, cfg.tol_nondegen)
            rec = rep.to_dict()
            if not rep.nondegenerate:
                code = EXIT_DEGENERATE
        except CriticalPointError as exc:
            rec = critical_record(fld, p, str(exc))
            code = EXIT_DEGENERATE
        records.append(rec)
    with _output(cfg) as out:
        if cfg.fmt == "json":
            for rec in records:
                out.write(json.dumps(_finite_or_null(rec), allow_nan=False) + "\n")
        else:
            w = csv.writer(out, lineterminator="\n")
            w.writerow([*fld.var_names, *INVARIANT_CSV])
            for rec in records:
                flags = rec["flags"]
                vals = [rec.get(k) for k in INVARIANT_CSV[:5]] + [flags["regular_point"], flags["nondegenerate"]]
                w.writerow([*(repr(float(x)) for x in rec["point"]), *("" if v is None else v for v in vals)])
    return code


def cmd_verify(cfg):
    if cfg.suite not in verification.SUITES:
        raise UsageError(f"unknown suite {cfg.suite!r}; choose from {', '.join(verification.SUITES)}")
    with _output(cfg) as out:
        results = verification.run_suite(cfg.suite, cfg.seed, out=out if cfg.fmt == "table" else None)
        passed = all(r.passed for r in results)
        if cfg.fmt == "json":
            doc = {"suite": cfg.suite, "seed": cfg.seed, "passed": passed,
                   "criteria": [{"number": r.number, "title": r.title, "passed": r.passed,
                                 "checks": [_jsonable(c.__dict__) for c in r.checks]} for r in results]}
            out.write(json.dumps(doc, indent=2) + "\n")
        elif cfg.fmt == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["criterion", "check", "value", "relation", "tol", "passed"])
            for r in results:
                for c in r.checks:
                    w.writerow([r.number, c.name, repr(c.value), c.relation, repr(c.tol), c.passed])
    print(f"suite {cfg.suite} seed {cfg.seed}: {'PASS' if passed else 'FAIL'} "
          f"({sum(r.passed for r in results)}/{len(results)} campaigns passed)", file=sys.stderr)
    return EXIT_OK if passed else EXIT_USAGE


def ruled_field_for(cfg):
    """The RuledField behind a builtin (helicoid3, genhel, ruled)."""
    if cfg.builtin == "helicoid3":
        return ruled.helicoid_ruled()
    if cfg.builtin == "genhel":
        return ruled.genhel_ruled(*cfg.params)
    if cfg.builtin == "ruled":
        if not cfg.params:
            raise UsageError("ruled needs --param A (';'-separated components) and optionally --param Q")
        comps = cfg.params[0].split(";")
        imm = ruled.CentroaffineImmersion.from_expressions(comps)
        return ruled.build_ruled_field(imm, *cfg.params[1:])
    raise UsageError("this command needs a ruled field: --builtin helicoid3, genhel or ruled")


def cmd_sample(cfg):
    try:
        rf = ruled_field_for(cfg)
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    n = rf.n
    names = list(rf.field.var_names)
    if cfg.builtin in exprlang.BUILTINS:
        # same function as the builtin, so report in its coordinates
        names = list(cfg.field().var_names)
    nr, ns = cfg.grid
    r_axes = [np.linspace(lo, hi, nr) for lo, hi in rf.base.domain]
    s_axes = [np.linspace(-cfg.s_range, cfg.s_range, ns)] * n
    rows = []
    worst = 0.0
    for combo in itertools.product(*r_axes, *s_axes):
        r, s = np.array(combo[:n]), np.array(combo[n:])
        p = ruled.level_parameterization(rf, cfg.t, r, s)
        dev = abs(rf.field.value(p) - cfg.t)
        worst = max(worst, dev)
        rows.append(p)
    if worst > SAMPLE_TOL * max(1.0, abs(cfg.t)):
        print(f"error: sampled points leave the level set (max |F - t| = {worst:.3e})", file=sys.stderr)
        return EXIT_DEGENERATE
    with _output(cfg) as out:
        if cfg.fmt == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(names)
            for p in rows:
                w.writerow([repr(float(x)) for x in p])
        else:
            out.write(json.dumps({"field": rf.to_dict(), "t": cfg.t, "max_level_error": worst,
                                  "var_names": names,
                                  "points": [p.tolist() for p in rows]}) + "\n")
    print(f"{len(rows)} points, max |F - t| = {worst:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_flow(cfg):
    if cfg.steps < 1:
        raise UsageError(f"--steps must be at least 1, got {cfg.steps}")
    if not cfg.t_end >= 0:
        raise UsageError(f"--t-end must be nonnegative, got {cfg.t_end}")
    fld = cfg.field()
    if not cfg.points:
        raise UsageError("give a start point with --point")
    _check_dim(fld, cfg.points)
    exact = None
    if cfg.exact:
        rf = ruled_field_for(cfg)
        exact = flow.ruled_exact(rf)
    trajs = []
    for p in cfg.points:
        try:
            trajs.append(flow.integrate(fld, p, cfg.t_end, cfg.steps, tol_nondegen=cfg.tol_nondegen))
        except (DegenerateError, CriticalPointError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DEGENERATE
    report = flow.flow_report(fld, cfg.points, cfg.t_end, cfg.steps, exact=exact)
    with _output(cfg) as out:
        if cfg.fmt == "csv":
            for i, tr in enumerate(trajs):
                if len(trajs) > 1:
                    out.write(f"# trajectory {i}\n")
                out.write(tr.to_csv())
        else:
            out.write(json.dumps({"trajectories": [tr.to_dict() for tr in trajs],
                                  "report": _jsonable(report)}) + "\n")
    for row in report["rows"]:
        lin = row["linearity_residual"]
        lin = "n/a (Ucal varies along the path)" if lin is None else f"{lin:.3e}"
        msg = f"start {row['start']}: {row['reason']}, linearity residual {lin}"
        if row.get("order") is not None:
            msg += f", order {row['order']:.3f}" + (" (exact to roundoff)" if row.get("exact_to_roundoff") else "")
        if "exact_error" in row:
            msg += f", max |RK4 - exact| {row['exact_error']:.3e}"
        print(msg, file=sys.stderr)
    return EXIT_OK if report["all_completed"] else EXIT_DEGENERATE


def _finite_or_null(obj):
    if isinstance(obj, dict):
        return {k: _finite_or_null(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite_or_null(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


COMMANDS = {"invariants": cmd_invariants, "verify": cmd_verify, "sample": cmd_sample, "flow": cmd_flow}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CalibrationError, DegenerateError, CriticalPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except EquiaffineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
