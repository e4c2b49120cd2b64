"""Command-line front door.

Every subcommand reads a config file, runs one analysis, and writes
delimited output (plus figures with --plot) into the output directory
along with a run manifest. Exit status: 0 success, 1 domain error,
2 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import exports, plots
from .dynamics import integrate
from .equilibrium import find_all, solve_from
from .errors import (DimensionMismatch, DomainViolation, HiveError,
                     MalformedDocument)
from .model import HiveConfig, parse_config, validate
from .regime import sweep
from .spectral import detect_limit_cycle, hopf_scan, jacobian_eigen
from .statics import rybczynski, stolper_samuelson

DOMAIN_ERRORS = (MalformedDocument, DimensionMismatch, DomainViolation,
                 ValueError)


def build_parser():
    p = argparse.ArgumentParser(prog="hive",
                                description="population-economy engine")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="config JSON path")
        if out:
            sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--plot", action="store_true", help="emit figures")

    sp = sub.add_parser("validate", help="check a config against the standing assumptions")
    sp.add_argument("--config", required=True)

    sp = sub.add_parser("solve", help="inner allocation at a population")
    common(sp)
    sp.add_argument("--at", default=None, help="comma-separated populations")

    sp = sub.add_parser("simulate", help="integrate the population dynamics")
    common(sp)
    sp.add_argument("--start", default=None, help="comma-separated N0")
    sp.add_argument("--dt", type=float, default=1e-2)
    sp.add_argument("--horizon", type=float, default=50.0)
    sp.add_argument("--cap", action="store_true", help="project onto the budget set")

    sp = sub.add_parser("equilibria", help="multistart steady-state search")
    common(sp)
    sp.add_argument("--starts", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("spectrum", help="eigen-analysis of found equilibria")
    common(sp)
    sp.add_argument("--starts", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("statics", help="price and population elasticity matrices")
    common(sp)
    sp.add_argument("--starts", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--delta", type=float, default=1e-2)

    sp = sub.add_parser("hopf", help="scan a parameter for an oscillatory onset")
    common(sp)
    sp.add_argument("--param", required=True, help="e.g. gamma[1,0]")
    sp.add_argument("--range", required=True, help="LO:HI")
    sp.add_argument("--steps", type=int, default=20)
    sp.add_argument("--cycle", action="store_true",
                    help="measure the limit cycle past the crossing")

    sp = sub.add_parser("regime", help="two-axis regime sweep")
    common(sp)
    sp.add_argument("--param", default="gamma", help="axis 1 selector")
    sp.add_argument("--range", required=True, help="axis 1 LO:HI")
    sp.add_argument("--param2", default="eta[0]", help="axis 2 selector")
    sp.add_argument("--range2", required=True, help="axis 2 LO:HI")
    sp.add_argument("--grid", default="10x10", help="N1xN2 resolutions")
    sp.add_argument("--starts", type=int, default=48)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--serial", action="store_true", help="disable the worker pool")

    sp = sub.add_parser("serve", help="run the steering service")
    sp.add_argument("--config", default=None, help="optional default config")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8787)
    sp.add_argument("--log-dir", default=None,
                    help="directory for per-session event logs")
    sp.add_argument("--static", default=None,
                    help="directory of console assets to mount at /console")
    return p


def _load(path) -> HiveConfig:
    return parse_config(Path(path))


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_range(text):
    lo, hi = text.split(":")
    return float(lo), float(hi)


def _manifest(out, args, extra=None):
    opts = {k: v for k, v in vars(args).items() if k != "command" and v is not None}
    opts["command"] = args.command
    if extra:
        opts.update(extra)
    exports.write_manifest(out / "manifest.txt", opts)


def _vector(text, S, default):
    if text is None:
        return default
    v = np.array([float(x) for x in text.split(",")])
    if v.size != S:
        raise DomainViolation(f"expected {S} comma-separated values")
    return v


def cmd_validate(args):
    cfg = _load(args.config)
    rep = validate(cfg)
    print(f"externality_norm={rep.externality_norm:.6g}")
    print(f"weak_ext_bound={rep.weak_ext_bound:.6g} "
          f"applicable={rep.weak_ext_applicable} satisfied={rep.weak_ext_satisfied}")
    print(f"eta_max={rep.eta_max:.6g}")
    for msg in rep.messages:
        print(f"note: {msg}")
    print("ok" if rep.ok else "warnings present")
    return 0


def cmd_solve(args):
    cfg = _load(args.config)
    out = _outdir(args)
    N = _vector(args.at, cfg.S, cfg.start if cfg.start is not None else cfg.centroid())
    from .allocator import solve_inner
    alloc = solve_inner(cfg, N)
    print(f"W* = {alloc.W_star:.10g}")
    print("lambda =", " ".join(f"{v:.6g}" for v in alloc.lam))
    print("Y =", " ".join(f"{v:.6g}" for v in alloc.Y))
    import csv as _csv
    with (out / "allocation.csv").open("w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["family"] + [f"K_{m+1}" for m in range(cfg.M)]
                   + ["Y"] + [f"theta_{m+1}" for m in range(cfg.M)])
        for j in range(cfg.S):
            w.writerow([cfg.family_names[j] if cfg.family_names else j]
                       + [repr(float(v)) for v in alloc.K[j]]
                       + [repr(float(alloc.Y[j]))]
                       + [repr(float(v)) for v in alloc.theta[j]])
    _manifest(out, args, {"N": ",".join(repr(float(v)) for v in N)})
    return 0


def cmd_simulate(args):
    cfg = _load(args.config)
    out = _outdir(args)
    N0 = _vector(args.start, cfg.S,
                 cfg.start if cfg.start is not None else cfg.centroid())
    traj = integrate(cfg, N0, step=args.dt, horizon=args.horizon,
                     cap_mode=args.cap)
    exports.write_trajectory_csv(out / "trajectory.csv", traj)
    exports.write_events_csv(out / "events.csv", traj)
    if args.plot:
        plots.plot_trajectory(out / "trajectory.png", traj, cfg.family_names)
    _manifest(out, args, {"N0": ",".join(repr(float(v)) for v in N0)})
    print(f"final N = {np.array2string(traj.N[-1], precision=6)}")
    print(f"events: {[e[1] for e in traj.events]}")
    return 0


def _solve_and_classify(cfg, starts, seed):
    recs = find_all(cfg, starts=starts, seed=seed)
    for rec in recs:
        try:
            jacobian_eigen(cfg, rec)
        except HiveError:
            rec.notes.append("jacobian_failed")
    return recs


def cmd_equilibria(args):
    cfg = _load(args.config)
    out = _outdir(args)
    recs = _solve_and_classify(cfg, args.starts, args.seed)
    exports.write_equilibria_csv(out / "equilibria.csv", recs)
    _manifest(out, args)
    print(f"found {len(recs)} records "
          f"({sum(1 for r in recs if r.valid)} valid)")
    for i, r in enumerate(recs):
        print(f"  [{i}] N*={np.array2string(r.N_star, precision=4)} "
              f"W*={r.W_star:.6g} {r.stability} valid={r.valid}")
    return 0


def cmd_spectrum(args):
    cfg = _load(args.config)
    out = _outdir(args)
    recs = _solve_and_classify(cfg, args.starts, args.seed)
    exports.write_equilibria_csv(out / "equilibria.csv", recs)
    if args.plot:
        plots.plot_eigenvalues(out / "spectrum.png", recs)
    import csv as _csv
    with (out / "spectrum.csv").open("w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["id", "eigenvalue_re", "eigenvalue_im"])
        for i, rec in enumerate(recs):
            if rec.eigenvalues is None:
                continue
            for ev in rec.eigenvalues:
                w.writerow([i, repr(float(ev.real)), repr(float(ev.imag))])
    _manifest(out, args)
    for i, rec in enumerate(recs):
        if rec.eigenvalues is not None:
            print(f"  [{i}] {rec.stability}: "
                  + " ".join(f"{e:.4g}" for e in rec.eigenvalues))
    return 0


def cmd_statics(args):
    cfg = _load(args.config)
    out = _outdir(args)
    recs = _solve_and_classify(cfg, args.starts, args.seed)
    interior = [r for r in recs if r.interior and r.valid]
    if not interior:
        print("no valid interior equilibrium found", file=sys.stderr)
        return 2
    rec = interior[0]
    ss = stolper_samuelson(cfg, rec, delta=args.delta)
    rb = rybczynski(cfg, rec, delta=args.delta)
    res_names = list(cfg.resource_names) or [f"resource_{m}" for m in range(cfg.M)]
    fam_names = list(cfg.family_names) or [f"family_{j}" for j in range(cfg.S)]
    exports.write_matrix_csv(out / "stolper_samuelson.csv", ss, res_names, fam_names)
    exports.write_matrix_csv(out / "rybczynski.csv", rb, fam_names, res_names)
    _manifest(out, args)
    print("price elasticities w.r.t. weights (rows = resources):")
    print(np.array2string(ss.values, precision=4))
    print("population elasticities w.r.t. endowments (rows = families):")
    print(np.array2string(rb.values, precision=4))
    return 0


def cmd_hopf(args):
    cfg = _load(args.config)
    out = _outdir(args)
    lo, hi = _parse_range(args.range)
    result = hopf_scan(cfg, args.param, lo, hi, steps=args.steps,
                       N0=cfg.start)
    exports.write_branch_csv(out / "branch.csv", result)
    if args.plot:
        plots.plot_branch(out / "branch.png", result)
    extra = {"found": result.found}
    if result.found:
        print(f"crossing at {args.param} = {result.p_critical:.6g}, "
              f"omega = {result.omega:.6g}, period ~ {result.period_estimate:.6g}, "
              f"transversality slope = {result.alpha_slope}")
        extra.update({"p_critical": result.p_critical, "omega": result.omega})
        if args.cycle and result.critical_record is not None:
            from .model import with_param
            past = result.p_critical + 0.15 * (hi - lo) * np.sign(
                result.alpha_slope or 1.0)
            cfg_past = with_param(cfg, args.param, float(past))
            rec = solve_from(cfg_past, result.critical_record.N_star)
            jacobian_eigen(cfg_past, rec)
            info = detect_limit_cycle(cfg_past, rec)
            print(f"cycle at {args.param}={past:.4g}: found={info.found} "
                  f"period={info.period}")
            extra["cycle_period"] = info.period
    else:
        print("no crossing in range" + (" (branch lost)" if result.branch_lost else ""))
    _manifest(out, args, extra)
    return 0


def cmd_regime(args):
    cfg = _load(args.config)
    out = _outdir(args)
    lo1, hi1 = _parse_range(args.range)
    lo2, hi2 = _parse_range(args.range2)
    n1, n2 = (int(x) for x in args.grid.lower().split("x"))
    done = {"n": 0}

    def progress(i, total):
        if i % max(1, total // 10) == 0 or i == total:
            print(f"  {i}/{total} cells", file=sys.stderr)

    grid = sweep(cfg, (args.param, lo1, hi1, n1), (args.param2, lo2, hi2, n2),
                 starts=args.starts, seed=args.seed,
                 parallel=not args.serial, progress=progress)
    exports.write_grid_csv(out / "regime.csv", grid)
    f1, f2 = grid.frontier_estimates()
    if args.plot:
        plots.plot_regime_grid(out / "regime.png", grid)
    _manifest(out, args, {"frontier_" + args.param: f1,
                          "frontier_" + args.param2: f2})
    counts = {}
    for c in grid.cells:
        counts[c.classification] = counts.get(c.classification, 0) + 1
    print("cells:", counts)
    print(f"frontier estimates: {args.param} ~ {f1}, {args.param2} ~ {f2}")
    return 0


def cmd_serve(args):
    import uvicorn

    from .service import create_app
    config = Path(args.config) if args.config else None
    if config is None:
        bundled = Path(__file__).resolve().parents[2] / "configs" / "three_family.json"
        if bundled.is_file():
            config = bundled
    static = Path(args.static) if args.static else None
    if static is None:
        dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if dist.is_dir():
            static = dist
    log_dir = None
    if args.log_dir:
        log_dir = Path(args.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
    app = create_app(default_config=config, log_dir=log_dir, static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "spectrum": cmd_spectrum,
    "statics": cmd_statics,
    "hopf": cmd_hopf,
    "regime": cmd_regime,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except HiveError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
