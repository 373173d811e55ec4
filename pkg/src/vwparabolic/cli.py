"""Command-line entry point and the config-driven run.

Verbs::

    vwparabolic solve       one problem at one epsilon
    vwparabolic case ID     a built-in case over the epsilon ladder
    vwparabolic sweep       moderateness fits of the solution net
    vwparabolic compare-nets  exponential vs cosine mollifier
    vwparabolic consistency   mollified smooth data vs raw data
    vwparabolic validate    ellipticity and resolution checks only

``VW_THREADS`` caps the number of worker threads.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .cases import builtin_case
from .config import NETS, ParseError, RunConfig, load_config
from .dist_calc import cosine_net, default_net, trapezoid_weights
from .fdsolver import SchemeConfig, SingularSystem, solve, solve_lifted, write_trajectory_csv
from .norms import coefficient_norms, energy_norms, with_estimate, write_energy_csv
from .problem import (EllipticityViolated, ResolutionInsufficient, build_instance, validate)
from .sweep import (RESOLVED, FitUnreliable, GridPolicy, _pmap, compare_nets, consistency_test,
                    run_sweep, summarize_sweep, write_fit_csv, write_sweep_csv)

__all__ = ["RunError", "run", "main"]

log = logging.getLogger("vwparabolic")


class RunError(RuntimeError):
    """A solver failure tagged with the problem and epsilon it came from."""


def _tag(spec, eps) -> str:
    return f"{spec.name or 'problem'}, eps={eps:g}"


def _grids(cfg: RunConfig) -> dict:
    if cfg.nx is None and cfg.nt is None:
        return GridPolicy(x_refine=cfg.x_refine).grids(cfg.spec.T, cfg.epsilons)
    auto = GridPolicy(x_refine=cfg.x_refine).grid(cfg.spec.T, min(cfg.epsilons))
    g = (cfg.nx or auto[0], cfg.nt or auto[1])
    return {e: g for e in cfg.epsilons}


def _singular_time(cfg: RunConfig) -> float | None:
    if cfg.case_id in (3, 5):
        return cfg.location if cfg.location is not None else {3: 0.5, 5: 0.45}[cfg.case_id]
    return None


def run(cfg: RunConfig) -> dict:
    """Solve ``cfg.spec`` at every epsilon and write all artifacts.

    Writes per-epsilon snapshot CSVs, ``energy.csv``, ``sweep.csv`` and
    ``fits.csv`` (two or more epsilons), SVG figures and ``run_log.json``.
    Timings appear only in the log so the CSVs are reproducible byte for
    byte.  Returns the log as a dict.
    """
    start = time.perf_counter()
    spec, net = cfg.spec, cfg.net()
    grids = _grids(cfg)
    nx_max = max(g[0] for g in grids.values())
    nt_max = max(g[1] for g in grids.values())
    report = validate(spec, net, nx_max, nt_max)
    out = Path(cfg.directory)
    out.mkdir(parents=True, exist_ok=True)
    config = SchemeConfig(cfg.theta)

    def job(eps):
        nx, nt = grids[eps]
        try:
            inst = build_instance(spec, net, eps, nx, nt, check=False)
            if inst.has_zero_boundary():
                traj, which = solve(inst, config), "energy"
            else:
                traj, which = solve_lifted(inst, config), "energy_lifted"
            rep = with_estimate(energy_norms(traj, inst), inst, which)
        except (SingularSystem, FloatingPointError, ValueError) as exc:
            raise RunError(f"{_tag(spec, eps)}: {exc}") from exc
        return traj, rep, coefficient_norms(inst)

    results = _pmap(job, cfg.epsilons)
    files = []
    for eps, (traj, _, _) in zip(cfg.epsilons, results):
        path = out / f"u_eps{eps:g}.csv"
        write_trajectory_csv(traj, path, cfg.snapshots)
        files.append(path.name)
    write_energy_csv([(spec.name, e, r[1]) for e, r in zip(cfg.epsilons, results)], out / "energy.csv")
    files.append("energy.csv")

    sweep = summarize_sweep(spec, cfg.epsilons, [r[1] for r in results], [r[2] for r in results], grids)
    if sweep.fits:
        write_sweep_csv(sweep.epsilons, sweep.table, out / "sweep.csv")
        write_fit_csv(sweep.fits, out / "fits.csv", sweep.classification)
        files += ["sweep.csv", "fits.csv"]

    if cfg.plots:
        from .plotting import plot_loglog, plot_norm_series, plot_profiles

        for t in cfg.snapshots:
            profiles = {e: (r[0].x, r[0].snapshot(t)) for e, r in zip(cfg.epsilons, results)}
            name = f"profiles_t{t:g}.svg"
            plot_profiles(profiles, t, out / name, title=f"{spec.name}: u({t:g}, x)")
            files.append(name)
        series = {}
        for e, (traj, _, _) in zip(cfg.epsilons, results):
            w = trapezoid_weights(traj.x)
            series[e] = (traj.t, np.sqrt((traj.values**2) @ w))
        plot_norm_series(series, out / "norm_series.svg", mark=_singular_time(cfg),
                         title=f"{spec.name}: ||u(t, .)||")
        files.append("norm_series.svg")
        if sweep.fits:
            plot_loglog(sweep.epsilons, sweep.table, sweep.fits, out / "sweep.svg",
                        names=("very_weak", "dtu_l2", "dxx", "l2_h1"), title=f"{spec.name}: sweep")
            files.append("sweep.svg")

    logdata = {
        "version": __version__,
        "problem": spec.name,
        "config": cfg.source,
        "resolved": {
            "case": cfg.case_id, "location": cfg.location, "T": spec.T, "theta": cfg.theta,
            "epsilons": list(cfg.epsilons), "net": cfg.net_name, "snapshots": list(cfg.snapshots),
            "grids": {f"{e:g}": list(g) for e, g in grids.items()},
        },
        "validation": report.summary(),
        "timings": {f"{e:g}": r[0].stats.get("wall_time") for e, r in zip(cfg.epsilons, results)},
        "total_seconds": time.perf_counter() - start,
        "energy": {f"{e:g}": r[1].as_dict() for e, r in zip(cfg.epsilons, results)},
        "sweep_summary": sweep.summary(),
        "files": files,
    }
    (out / "run_log.json").write_text(json.dumps(logdata, indent=2, default=str) + "\n")
    return logdata


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--eps", type=_floats, help="epsilon ladder, e.g. 0.3,0.1,0.05")
    common.add_argument("--nx", type=int, help="spatial cells (default: from the smallest epsilon)")
    common.add_argument("--nt", type=int, help="time steps (default: from the smallest epsilon)")
    common.add_argument("--theta", type=float, help="time weighting in [0.5, 1]")
    common.add_argument("--T", type=float, dest="T", help="final time")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--snapshots", type=_floats, help="snapshot times, e.g. 0,0.25,1")
    common.add_argument("--location", type=float, help="move the built-in case's delta")
    common.add_argument("--net", choices=sorted(NETS), help="mollifier family")
    common.add_argument("--no-plots", action="store_true", help="skip SVG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="vwparabolic", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("solve", parents=[common], help="one problem at one epsilon")
    c = sub.add_parser("case", parents=[common], help="built-in case over the epsilon ladder")
    c.add_argument("id", type=int, choices=range(1, 6), metavar="ID", help="case 1..5")
    s = sub.add_parser("sweep", parents=[common], help="moderateness fits of the solution net")
    s.add_argument("--x-refine", type=int, help="spatial refinement beyond h = eps/4 (default 64)")
    sub.add_parser("compare-nets", parents=[common], help="exponential vs cosine mollifier")
    sub.add_parser("consistency", parents=[common], help="mollified vs raw smooth data")
    sub.add_parser("validate", parents=[common], help="check ellipticity and resolution")
    return p


def _configure(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    kw = {}
    if args.verb == "case":
        kw.update(case_id=args.id, location=args.location)
    elif args.location is not None:
        if cfg.case_id is None:
            raise ParseError("--location applies only to built-in cases")
        kw["location"] = args.location
    T = args.T if args.T is not None else cfg.spec.T
    case_id = kw.get("case_id", cfg.case_id)
    if case_id is not None:
        kw["spec"] = builtin_case(case_id, kw.get("location", cfg.location), T)
    elif args.T is not None:
        kw["spec"] = replace(cfg.spec, T=T)
    if args.T is not None and args.snapshots is None:
        kw["snapshots"] = tuple(min(s, T) for s in cfg.snapshots)
    for name in ("nx", "nt", "theta", "snapshots"):
        if getattr(args, name) is not None:
            kw[name] = getattr(args, name)
    if args.eps is not None:
        kw["epsilons"] = args.eps
    if args.out is not None:
        kw["directory"] = args.out
    if args.net is not None:
        kw["net_name"] = args.net
    if args.no_plots:
        kw["plots"] = False
    cfg = replace(cfg, **kw)
    if any(not 0 <= s <= cfg.spec.T for s in cfg.snapshots):
        raise ParseError(f"snapshot times must lie in [0, {cfg.spec.T}]")
    return cfg


def _cmd_solve(cfg: RunConfig) -> int:
    cfg = replace(cfg, epsilons=(min(cfg.epsilons),))
    data = run(cfg)
    print(f"solved {data['problem']} at eps={cfg.epsilons[0]:g}; wrote {len(data['files'])} files to {cfg.directory}")
    return 0


def _cmd_case(cfg: RunConfig) -> int:
    data = run(cfg)
    print(data["sweep_summary"])
    print(f"wrote {len(data['files'])} files to {cfg.directory}")
    return 0


def _cmd_sweep(cfg: RunConfig, x_refine: int | None) -> int:
    net = cfg.net()
    if cfg.nx is not None or cfg.nt is not None:
        policy = GridPolicy(nx_min=cfg.nx or 2, nt_min=cfg.nt or 1, x_refine=x_refine or 1)
        grids = policy.grids(cfg.spec.T, cfg.epsilons)
        validate(cfg.spec, net, max(g[0] for g in grids.values()), max(g[1] for g in grids.values()))
    else:
        policy = RESOLVED if x_refine is None else replace(RESOLVED, x_refine=x_refine)
    report = run_sweep(cfg.spec, net, policy, SchemeConfig(cfg.theta))
    out = Path(cfg.directory)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(report.epsilons, report.table, out / "sweep.csv")
    if report.fits:
        write_fit_csv(report.fits, out / "fits.csv", report.classification)
        if cfg.plots:
            from .plotting import plot_loglog

            plot_loglog(report.epsilons, report.table, report.fits, out / "sweep.svg",
                        names=("very_weak", "dtu_l2", "dxx"), title=f"{cfg.spec.name}: sweep")
    print(report.summary())
    main_fit = report.fits.get("very_weak")
    return 0 if main_fit is None or main_fit.reliable else 1


def _cmd_compare(cfg: RunConfig) -> int:
    a, b = default_net(cfg.epsilons), cosine_net(cfg.epsilons)
    policy = GridPolicy() if cfg.nx is None else GridPolicy(nx_min=cfg.nx, nt_min=cfg.nt or 256)
    report = compare_nets(cfg.spec, a, b, policy, SchemeConfig(cfg.theta))
    out = Path(cfg.directory)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(report.epsilons, report.table, out / "negligibility.csv")
    if report.fits:
        write_fit_csv(report.fits, out / "negligibility_fits.csv")
    print(report.summary())
    return 0


def _cmd_consistency(cfg: RunConfig) -> int:
    policy = GridPolicy() if cfg.nx is None else GridPolicy(nx_min=cfg.nx, nt_min=cfg.nt or 256)
    report = consistency_test(cfg.spec, cfg.net(), policy, SchemeConfig(cfg.theta))
    out = Path(cfg.directory)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "consistency.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epsilon", "error", "floor"])
        for e, v in zip(report.epsilons, report.errors):
            writer.writerow([repr(float(e)), repr(float(v)), repr(float(report.floor))])
    print(report.summary())
    return 0 if report.monotone and report.reaches_floor else 1


def _cmd_validate(cfg: RunConfig) -> int:
    grids = _grids(cfg)
    report = validate(cfg.spec, cfg.net(), max(g[0] for g in grids.values()),
                      max(g[1] for g in grids.values()), raise_errors=False)
    print(report.summary())
    return 0 if report.ok else 1


def _report(exc: Exception) -> None:
    msg = str(exc)
    name = type(exc).__name__
    print(f"error: {msg}" if msg.startswith(name) else f"error: {name}: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _configure(args)
        if args.verb == "solve":
            return _cmd_solve(cfg)
        if args.verb == "case":
            return _cmd_case(cfg)
        if args.verb == "sweep":
            return _cmd_sweep(cfg, args.x_refine)
        if args.verb == "compare-nets":
            return _cmd_compare(cfg)
        if args.verb == "consistency":
            return _cmd_consistency(cfg)
        return _cmd_validate(cfg)
    except (ParseError, ResolutionInsufficient, EllipticityViolated) as exc:
        _report(exc)
        return 2
    except (RunError, FitUnreliable, OSError, ValueError) as exc:
        _report(exc)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
