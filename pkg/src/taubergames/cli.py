"""Command-line interface.

Subcommands: density (structural diagnostics of a rate family), value
(DP/brute value enclosures of a model under a family), tauber (limit
coincidence checks, strategy-family axioms, and rate schedules).  Every run
writes delimited output, and numeric runs write an SVG chart next to it.

Exit codes: 0 the requested check passed (or the run was pure computation),
1 the check failed, 2 invalid input, 3 a resource cap was hit.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import densities, games, tauberian, values
from .errors import (
    CapExceededError,
    DomainError,
    HorizonOverflowError,
    InfeasibleScheduleError,
    ModelFormatError,
    UnreachableQuantileError,
    UnsupportedFamilyError,
)
from .reports import PACKAGE_VERSION, curves_chart, line_chart, write_csv

_INPUT_ERRORS = (ModelFormatError, DomainError, UnsupportedFamilyError,
                 UnreachableQuantileError, InfeasibleScheduleError,
                 FileNotFoundError, IsADirectoryError, PermissionError)
_CAP_ERRORS = (CapExceededError, HorizonOverflowError)


def parse_grid(spec: str) -> tuple[float, ...]:
    """Grid spec: `start:stop:geomN`, `start:stop:linN`, or a comma list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DomainError(f"grid spec needs start:stop:kindN, got {spec!r}")
        try:
            start, stop = float(parts[0]), float(parts[1])
            kind = parts[2]
            if kind.startswith("geom"):
                return tuple(float(x)
                             for x in np.geomspace(start, stop, int(kind[4:])))
            if kind.startswith("lin"):
                return tuple(float(x)
                             for x in np.linspace(start, stop, int(kind[3:])))
        except ValueError:
            raise DomainError(f"bad grid spec {spec!r}")
        raise DomainError(f"unknown grid spacing {kind!r} (want geomN/linN)")
    try:
        vals = tuple(float(x) for x in spec.split(",") if x.strip())
    except ValueError:
        raise DomainError(f"bad grid spec {spec!r}")
    if not vals:
        raise DomainError(f"empty grid spec {spec!r}")
    return vals


def _parse_floats(spec: str) -> tuple[float, ...]:
    vals = tuple(float(x) for x in spec.split(",") if x.strip())
    if not vals:
        raise DomainError(f"empty list {spec!r}")
    return vals


def _outdir(args) -> Path:
    out = args.out or os.environ.get("TAUBERGAMES_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _slug(name: str) -> str:
    return "".join(c if (c.isalnum() or c in "-_.") else "-" for c in name)


def _finite_or_nan(v: float) -> float:
    return v if math.isfinite(v) else float("nan")


# -- density ------------------------------------------------------------------


def cmd_density(args) -> int:
    fam = densities.load_family(args.family)
    grid = parse_grid(args.lambda_grid) if args.lambda_grid else None
    outdir = _outdir(args)
    slug = _slug(fam.name)
    cols = ("family_id", "lambda", "r_or_T", "statistic", "value")
    units = "lambda:inverse-time,r_or_T:mass-level-or-time,value:per-statistic"
    rows: list[tuple] = []

    if args.diag == "flat":
        rep = densities.flatness_diagnostic(
            fam, r_grid=_parse_floats(args.r_grid) if args.r_grid else None,
            lam_grid=grid)
        for i, r in enumerate(rep.r_grid):
            for j, lam in enumerate(rep.lam_grid):
                rows.append((fam.name, lam, r, "variation",
                             float(rep.table[i, j])))
        for i, r in enumerate(rep.r_grid):
            rows.append((fam.name, rep.lam_grid[-1], r, "row-limit",
                         float(rep.limit_estimates[i])))
        rows.append((fam.name, rep.lam_grid[-1], rep.r_grid[-1],
                     "double-limit", rep.double_limit))
        rows.append((fam.name, rep.lam_grid[-1], rep.r_grid[-1],
                     "grid-sensitivity", rep.sensitivity))
        verdict, reason = rep.flat, rep.reason
        series = {f"r={r:g}": [_finite_or_nan(float(v)) for v in rep.table[i]]
                  for i, r in enumerate(rep.r_grid)}
        line_chart(outdir / f"density_flat_{slug}.svg", rep.lam_grid, series,
                   title=f"log variation up to the r-quantile [{fam.name}]",
                   xlabel="rate", ylabel="log variation", logx=True)
        csv_path = outdir / f"density_flat_{slug}.csv"
        label = "flat"
    elif args.diag == "regular":
        rep = densities.regularity_diagnostic(fam, args.r, lam_grid=grid)
        for j, lam in enumerate(rep.lam_grid):
            rows.append((fam.name, lam, rep.r, "variation",
                         float(rep.variations[j])))
        rows.append((fam.name, rep.lam_grid[-1], rep.r, "limsup",
                     rep.limsup_estimate))
        verdict, reason = rep.regular, rep.reason
        line_chart(outdir / f"density_regular_{slug}.svg", rep.lam_grid,
                   {f"r={rep.r:g}": [_finite_or_nan(float(v))
                                     for v in rep.variations]},
                   title=f"log variation at fixed mass level [{fam.name}]",
                   xlabel="rate", ylabel="log variation", logx=True)
        csv_path = outdir / f"density_regular_{slug}.csv"
        label = "regular"
    else:
        rep = densities.escape_diagnostic(
            fam, T_grid=_parse_floats(args.T_grid) if args.T_grid else None,
            mu_grid=grid)
        for i, T in enumerate(rep.T_grid):
            for j, mu in enumerate(rep.mu_grid):
                rows.append((fam.name, mu, T, "mass", float(rep.table[i, j])))
        if rep.witness_T is not None:
            rows.append((fam.name, rep.mu_grid[-1], rep.witness_T,
                         "witness-window", rep.witness_T))
        verdict, reason = rep.escapes, rep.reason
        line_chart(outdir / f"density_escape_{slug}.svg", rep.mu_grid,
                   {f"T={T:g}": [float(v) for v in rep.table[i]]
                    for i, T in enumerate(rep.T_grid)},
                   title=f"early mass within a window [{fam.name}]",
                   xlabel="rate", ylabel="mass", logx=True)
        csv_path = outdir / f"density_escape_{slug}.csv"
        label = "escape"

    write_csv(csv_path, "density", units, cols, rows)
    print(f"{label}[{fam.name}]: {'PASS' if verdict else 'FAIL'} ({reason})")
    print(f"wrote {csv_path}")
    return 0 if verdict else 1


# -- value --------------------------------------------------------------------


def cmd_value(args) -> int:
    model = games.load_model(args.model)
    fam = densities.load_family(args.family)
    raw = parse_grid(args.lambda_grid) if args.lambda_grid \
        else densities.default_lambda_grid()
    grid = [float(x) for x in fam.usable(raw)]
    if not grid:
        raise DomainError("no usable rates for this family")
    outdir = _outdir(args)
    slug = f"{_slug(model.name)}_{_slug(fam.name)}"
    cols = ("model_id", "family_id", "lambda", "omega", "lo", "hi",
            "horizon_steps")
    units = "lambda:inverse-time,lo:cost,hi:cost,horizon_steps:steps"
    rows = []
    mids: dict[str, list[float]] = {s: [] for s in model.states}
    for lam in grid:
        tbl = values.dp_value(model, fam.make(lam), args.horizon_mass)
        for s in model.states:
            rows.append((model.name, fam.name, lam, s, tbl.lo[s], tbl.hi[s],
                         tbl.horizon_steps))
            mids[s].append(tbl.mid(s))
    csv_path = outdir / f"value_{slug}.csv"
    write_csv(csv_path, "value", units, cols, rows)
    line_chart(outdir / f"value_{slug}.svg", grid,
               {s: mids[s] for s in model.states},
               title=f"value enclosure midpoints [{model.name}, {fam.name}]",
               xlabel="rate", ylabel="value", logx=True)
    print(f"wrote {csv_path}")
    if args.brute:
        brows = []
        for lam in grid:
            lower, upper = values.lower_upper_bruteforce(
                model, fam.make(lam), args.horizon, cap=args.cap)
            for s in model.states:
                brows.append((model.name, fam.name, lam, s, lower.lo[s],
                              upper.hi[s], args.horizon))
        bpath = outdir / f"value_brute_{slug}.csv"
        write_csv(bpath, "value", units, cols, brows)
        print(f"wrote {bpath}")
    return 0


# -- tauber -------------------------------------------------------------------


def _tauber_family_checks(args, model, fams, grid, outdir) -> int:
    cols = ("model_id", "family_id", "record", "value", "bound", "passed",
            "detail")
    units = "value:check-specific,bound:check-specific"
    rows = []
    curves = {}
    all_ok = True
    for fam in fams:
        if args.check == "tauber":
            rep = tauberian.tauber_check(model, fam, grid, args.horizon_mass)
        else:
            rep = tauberian.abel_check(model, fam, grid, args.horizon_mass)
        rows.append((model.name, fam.name, "coincide", rep.diff, rep.tol,
                     rep.passed, rep.label))
        for h in rep.hypotheses:
            rows.append((model.name, fam.name, f"hypothesis:{h.name}", "", "",
                         h.passed, h.detail))
        curves[fam.name] = (rep.fam_report.lam_grid, rep.fam_report.gaps)
        all_ok = all_ok and rep.passed
    slug = f"{args.check}_{_slug(model.name)}"
    csv_path = outdir / f"tauber_{slug}.csv"
    write_csv(csv_path, "tauber", units, cols, rows)
    curves_chart(outdir / f"tauber_{slug}.svg", curves,
                 title=f"uniformity gap to the limit [{model.name}]",
                 xlabel="rate", ylabel="worst-state gap", logx=True)
    print(f"{args.check}[{model.name}]: {'PASS' if all_ok else 'FAIL'}")
    print(f"wrote {csv_path}")
    return 0 if all_ok else 1


def _tauber_equivalence(args, model, fams, grid, outdir) -> int:
    mat = tauberian.equivalence_matrix(model, fams, grid, args.horizon_mass)
    cols = ("model_id", "family_a", "family_b", "diff", "tol", "passed",
            "witness")
    rows = [(model.name, c.row, c.col, c.diff, c.tol, c.passed,
             c.witness or "") for c in mat.cells]
    csv_path = outdir / f"tauber_equivalence_{_slug(model.name)}.csv"
    write_csv(csv_path, "tauber", "diff:cost,tol:cost", cols, rows)
    curves = {name: (rep.lam_grid, rep.sup_mid)
              for name, rep in mat.reports.items()}
    curves_chart(outdir / f"tauber_equivalence_{_slug(model.name)}.svg",
                 curves,
                 title=f"value midpoints along shrinking rates [{model.name}]",
                 xlabel="rate", ylabel="sup-state value", logx=True)
    print(f"equivalence[{model.name}]: "
          f"{'PASS' if mat.all_passed else 'FAIL'}")
    print(f"wrote {csv_path}")
    return 0 if mat.all_passed else 1


def _tauber_axioms(args, model, outdir) -> int:
    maxfam = games.policy_family(model, games.MAX, args.horizon)
    minfam = games.policy_family(model, games.MIN, args.horizon)
    rep = games.check_axioms(model, maxfam, minfam, args.horizon,
                             seed=args.seed)
    cols = ("model_id", "axiom", "passed", "witness", "detail")
    rows = [(model.name, name, c.passed,
             "" if c.witness is None else str(c.witness)[:200], c.detail)
            for name, c in rep.checks.items()]
    csv_path = outdir / f"tauber_axioms_{_slug(model.name)}.csv"
    write_csv(csv_path, "tauber", "passed:boolean", cols, rows)
    print(f"axioms[{model.name}] at horizon {args.horizon}: "
          f"{'PASS' if rep.all_passed else 'FAIL'}")
    print(f"wrote {csv_path}")
    return 0 if rep.all_passed else 1


def _tauber_schedule(args, fams, grid, outdir) -> int:
    fam = fams[0]
    if args.schedule == "geometric":
        sch = tauberian.build_geometric_schedule(fam, args.mu, args.eps)
        seg_rows = [(m + 1, sch.lam[m], sch.t[m], sch.tau[m])
                    for m in range(sch.k)]
    else:
        sch = tauberian.build_partition_schedule(fam, args.mu, args.eps)
        seg_rows = [(m + 1, sch.lam[m], sch.tau[m + 1] - sch.tau[m],
                     sch.tau[m + 1]) for m in range(len(sch.lam))]
    slug = f"{args.schedule}_{_slug(fam.name)}"
    seg_path = outdir / f"schedule_{slug}.csv"
    write_csv(seg_path, "tauber",
              "lambda:inverse-time,t:time,tau:time",
              ("index", "lambda", "t", "tau"), seg_rows)
    check_rows = [(c.name, c.value, c.bound, c.passed, c.detail)
                  for c in sch.checks]
    ok = sch.all_passed
    if args.model:
        model = games.load_model(args.model)
        desc = tauberian.verify_descent_chain(
            model, fam, sch, horizon_mass=args.horizon_mass, lam_grid=grid)
        for m in desc.margins:
            check_rows.append((f"descent-{m.index}", m.margin,
                               -m.uncertainty, m.passed,
                               f"worst state {m.worst_state}"))
        check_rows.append(("descent-telescoped", desc.telescoped_value,
                           desc.telescoped_bound, desc.telescoped_passed,
                           "inconclusive" if desc.inconclusive else ""))
        bound = tauberian.schedule_bound_check(
            model, fam, sch, horizon_mass=args.horizon_mass, lam_grid=grid)
        check_rows.append(("lower-bound-6eps",
                           min(bound.lower_margins.values()),
                           -bound.vstar_halfwidth, bound.lower_passed,
                           f"model {model.name}"))
        check_rows.append(("lower-bound-4eps",
                           min(bound.lower_margins_4eps.values()),
                           -bound.vstar_halfwidth, True, "recorded only"))
        check_rows.append(("upper-bound-6eps",
                           min(bound.upper_margins.values()),
                           -bound.vstar_halfwidth, bound.upper_passed,
                           "via the reflected model"))
        ok = ok and desc.passed and bound.passed
    check_path = outdir / f"schedule_{slug}_checks.csv"
    write_csv(check_path, "tauber",
              "value:check-specific,bound:check-specific",
              ("check", "value", "bound", "passed", "detail"), check_rows)
    line_chart(outdir / f"schedule_{slug}.svg",
               [r[0] for r in seg_rows],
               {"rate": [r[1] for r in seg_rows]},
               title=f"schedule rates [{args.schedule}, {fam.name}]",
               xlabel="segment", ylabel="rate", logy=True)
    print(f"schedule[{args.schedule}, {fam.name}, eps={sch.eps:g}, "
          f"mu={sch.mu:g}]: {'PASS' if ok else 'FAIL'}")
    print(f"wrote {seg_path}")
    print(f"wrote {check_path}")
    return 0 if ok else 1


def cmd_tauber(args) -> int:
    if not args.check and not args.schedule:
        raise DomainError("tauber needs --check or --schedule")
    outdir = _outdir(args)
    fams = [densities.load_family(n.strip())
            for n in args.families.split(",") if n.strip()]
    if not fams:
        raise DomainError("--families must name at least one family")
    grid = parse_grid(args.lambda_grid) if args.lambda_grid else None

    if args.schedule:
        return _tauber_schedule(args, fams, grid, outdir)
    if args.check == "axioms":
        if not args.model:
            raise DomainError("--check axioms needs --model")
        return _tauber_axioms(args, games.load_model(args.model), outdir)
    if not args.model:
        raise DomainError(f"--check {args.check} needs --model")
    model = games.load_model(args.model)
    if args.check in ("equivalence", "corollary"):
        return _tauber_equivalence(args, model, fams, grid, outdir)
    return _tauber_family_checks(args, model, fams, grid, outdir)


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="taubergames",
        description="Limit diagnostics and value experiments for turn-based "
                    "games averaged by rate-indexed densities.")
    p.add_argument("--version", action="version",
                   version=f"taubergames {PACKAGE_VERSION}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", help="structural diagnostics of a family")
    d.add_argument("--family", required=True,
                   help="built-in name or spec file path")
    d.add_argument("--diag", choices=("flat", "regular", "escape"),
                   default="flat")
    d.add_argument("--lambda-grid", dest="lambda_grid",
                   help="start:stop:geomN | start:stop:linN | comma list")
    d.add_argument("--r", type=float, default=0.5,
                   help="mass level for --diag regular")
    d.add_argument("--r-grid", dest="r_grid", help="comma list of mass levels")
    d.add_argument("--T-grid", dest="T_grid", help="comma list of windows")
    d.add_argument("--out", help="output directory (or $TAUBERGAMES_OUT)")
    d.set_defaults(func=cmd_density)

    v = sub.add_parser("value", help="value enclosures of a model")
    v.add_argument("--model", required=True,
                   help="bundled/<name> or model file path")
    v.add_argument("--family", default="cesaro")
    v.add_argument("--lambda-grid", dest="lambda_grid")
    v.add_argument("--horizon-mass", dest="horizon_mass", type=float,
                   default=0.999)
    v.add_argument("--brute", action="store_true",
                   help="also write exact policy-enumeration values")
    v.add_argument("--horizon", type=int, default=5,
                   help="step horizon for --brute")
    v.add_argument("--cap", type=int, default=games.ENUMERATION_CAP)
    v.add_argument("--out")
    v.set_defaults(func=cmd_value)

    t = sub.add_parser("tauber", help="limit checks and rate schedules")
    t.add_argument("--model", help="bundled/<name> or model file path")
    t.add_argument("--families", default="cesaro,exp",
                   help="comma list of family names or spec paths")
    t.add_argument("--check",
                   choices=("tauber", "abel", "equivalence", "corollary",
                            "axioms"),
                   help="corollary is an alias of equivalence")
    t.add_argument("--schedule", choices=("geometric", "partition"))
    t.add_argument("--eps", type=float, default=0.2)
    t.add_argument("--mu", type=float, default=1e-3)
    t.add_argument("--horizon", type=int, default=4,
                   help="step horizon for --check axioms")
    t.add_argument("--horizon-mass", dest="horizon_mass", type=float,
                   default=0.999)
    t.add_argument("--lambda-grid", dest="lambda_grid")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    t.set_defaults(func=cmd_tauber)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _CAP_ERRORS as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    except _INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
