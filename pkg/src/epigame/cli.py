"""Command-line front end.

Subcommands: ``design`` (closed-form report), ``simulate`` (closed-loop
run to CSV/SVG), ``bound`` (certified overshoot table), ``select-upsilon``
(largest weight meeting an overshoot target), ``sweep`` (concurrent batch
runs from a manifest). Exit codes: 0 ok, 2 validation failure,
3 integration failure, 4 precondition failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import numpy as np

from . import bounds as bnd
from .design import Case, check_assumption1, validate_rho
from .dynamics import integrate
from .errors import (
    IntegrationError,
    PreconditionViolated,
    TargetBelowFloor,
    ValidationError,
)
from .protocols import ipc_storage
from .scenario import deep_merge, dump_toml, load_scenario, scenario_from_dict

TAIL_WINDOW_DAYS = 1000.0


def _pct(v: float) -> str:
    return f"{100.0 * v:.4g}%"


def _ensure_out(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def cmd_design(args) -> int:
    sc = load_scenario(args.scenario)
    d = sc.design
    q_lo, q_hi = d.q_interval
    report = {
        "case": d.classification.kind.value,
        "pivot": d.classification.pivot,
        "assumption1": check_assumption1(sc.profile),
        "beta_star": d.beta_star,
        "x_star": list(d.x_star),
        "I_star": d.I_star,
        "R_star": d.R_star,
        "r_star": list(d.r_star),
        "rho_star": d.rho_star,
        "rho_star_valid": validate_rho(sc.profile, d.classification,
                                       d.beta_star, d.rho_star),
        "zeta1": d.zeta1,
        "zeta2": d.zeta2,
        "q_limit_interval": [q_lo, q_hi],
    }
    print(f"case           : {report['case']} (pivot {report['pivot']})")
    print(f"assumption 1   : {'holds' if report['assumption1'] else 'VIOLATED'}")
    print(f"beta*          : {d.beta_star!r}")
    print(f"x*             : {np.array2string(d.x_star, precision=6)}")
    print(f"(I*, R*)       : ({_pct(d.I_star)}, {_pct(d.R_star)})")
    print(f"r*             : {np.array2string(d.r_star, precision=6)}")
    print(f"rho*           : {d.rho_star!r} "
          f"({'valid' if report['rho_star_valid'] else 'INVALID'})")
    print(f"zeta1*, zeta2* : {d.zeta1!r}, {d.zeta2!r}")
    print(f"q limit set    : "
          + ("{0}" if q_lo == q_hi == 0 else f"[{q_lo!r}, {q_hi!r}]"))
    if args.out:
        out = _ensure_out(args.out)
        with open(os.path.join(out, "design.json"), "w") as fh:
            json.dump(report, fh, indent=2)
        print(f"wrote {os.path.join(out, 'design.json')}")
    return 0


def _run_trajectory(sc, t_end=None, tol=None):
    run = sc.run
    return integrate(
        sc.protocol, sc.profile, sc.params, sc.mechanism_config(),
        sc.initial, t_end if t_end is not None else run.t_end,
        rtol=tol if tol is not None else run.tol,
        atol=(tol if tol is not None else run.tol) * 1e-2,
        sample_every=run.sample_every)


def _simulate_summary(sc, traj) -> dict:
    d = sc.design
    t_end = float(traj.times[-1])
    tail = traj.mean_reward_cost(max(0.0, t_end - TAIL_WINDOW_DAYS), t_end)
    settle = traj.settling_time(d)
    return {
        "peak_infection_ratio": traj.peak_infection_ratio(d.I_star),
        "settling_time_days": settle if settle is not None else float("nan"),
        "tail_mean_reward_cost": tail,
        "budget_c_star": sc.c_star,
        "final_B": float(traj.B[-1]),
        "final_q": float(traj.q[-1]),
    }


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    traj = _run_trajectory(sc, args.t_end, args.tol)
    out = _ensure_out(args.out)
    csv_path = os.path.join(out, "trajectory.csv")
    traj.to_csv(csv_path)
    summary = _simulate_summary(sc, traj)
    print(f"peak I/I*            : {summary['peak_infection_ratio']:.6g}")
    settle = summary["settling_time_days"]
    print(f"settling time        : "
          + (f"{settle:.6g} days" if settle == settle else "not settled"))
    print(f"tail mean reward cost: {summary['tail_mean_reward_cost']:.6g} "
          f"(budget {sc.c_star:.6g})")
    print(f"wrote {csv_path}")
    if args.plot:
        svg_path = os.path.join(out, "trajectory.svg")
        from .plots import trajectory_figure
        trajectory_figure(traj, sc.design, svg_path)
        print(f"wrote {svg_path}")
    return 0


def _bound_rows(sc, upsilons, beta_tilde=None, oracle_grid=None):
    d = sc.design
    init = sc.initial
    beta_o = sc.profile.transmission_rate(init.x)
    I_hat, R_hat = bnd.endemic_point(sc.params, beta_o)
    if abs(init.I - I_hat) > 1e-9 or abs(init.R - R_hat) > 1e-9:
        raise PreconditionViolated(
            "bound command needs an endemic initial state; use "
            "endemic_at_beta in [initial]")
    if abs(init.q) > 1e-12:
        raise PreconditionViolated("bound command needs q(0) = 0")
    storage0 = ipc_storage(sc.protocol, init.x, d.r_o)
    if beta_tilde is None:
        beta_tilde = beta_o - d.beta_star
    floor = bnd.overshoot_floor(sc.profile, sc.params, d, beta_o)
    rows = []
    for u in upsilons:
        alpha = 0.5 * (u * beta_tilde) ** 2 + storage0
        pi = bnd.pi_star(sc.profile, sc.params, d, u, alpha)
        oracle = float("nan")
        if oracle_grid:
            oracle = bnd.pi_star_oracle(sc.profile, sc.params, d, u, alpha,
                                        grid=oracle_grid).value
        rows.append({"upsilon": u, "alpha": alpha, "pi_star": pi,
                     "floor": floor, "oracle_value": oracle})
    return rows


def _write_rows(path, rows, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(row[c])) if isinstance(row[c], (int, float))
                        else row[c] for c in columns])


def cmd_bound(args) -> int:
    sc = load_scenario(args.scenario)
    if args.upsilons:
        upsilons = [float(tok) for tok in args.upsilons.split(",")]
    else:
        upsilons = list(np.linspace(0.05, 2.5, 100))
    rows = _bound_rows(sc, upsilons, beta_tilde=args.beta_tilde,
                       oracle_grid=args.oracle_grid)
    out = _ensure_out(args.out)
    csv_path = os.path.join(out, "bounds.csv")
    _write_rows(csv_path, rows,
                ["upsilon", "alpha", "pi_star", "floor", "oracle_value"])
    for row in rows[:10]:
        print(f"upsilon={row['upsilon']:.6g} alpha={row['alpha']:.6g} "
              f"pi*={row['pi_star']:.6g} floor={row['floor']:.6g}")
    if len(rows) > 10:
        print(f"... ({len(rows)} rows total)")
    print(f"wrote {csv_path}")
    if args.plot:
        from .plots import bound_figure
        svg_path = os.path.join(out, "bounds.svg")
        bound_figure([r["upsilon"] for r in rows],
                     [r["pi_star"] for r in rows],
                     rows[0]["floor"], svg_path)
        print(f"wrote {svg_path}")
    return 0


def cmd_select_upsilon(args) -> int:
    sc = load_scenario(args.scenario)
    beta_o = sc.profile.transmission_rate(sc.initial.x)
    ups = bnd.select_upsilon(sc.profile, sc.params, sc.c_star, sc.rho_star,
                             beta_o, args.target, tol=args.tol_upsilon)
    alpha = 0.5 * (ups * (beta_o - sc.design.beta_star)) ** 2
    certified = bnd.pi_star(sc.profile, sc.params, sc.design, ups, alpha)
    print(f"largest upsilon meeting target {args.target:.6g}: {ups:.6g}")
    print(f"certified peak I/I* at that upsilon: {certified:.6g}")
    if args.out:
        out = _ensure_out(args.out)
        doc = deep_merge(sc.raw, {"design": {"upsilon": ups}})
        path = os.path.join(out, "scenario_selected.toml")
        with open(path, "w") as fh:
            fh.write(dump_toml(doc))
        print(f"wrote {path}")
    return 0


def _sweep_job(payload):
    """Worker for one sweep job; returns (name, status, metrics)."""
    name, command, base_doc, overrides, job_args, outdir = payload
    try:
        doc = deep_merge(base_doc, overrides)
        sc = scenario_from_dict(doc)
        os.makedirs(outdir, exist_ok=True)
        if command == "simulate":
            traj = _run_trajectory(sc)
            traj.to_csv(os.path.join(outdir, "trajectory.csv"))
            if job_args.get("plot"):
                from .plots import trajectory_figure
                trajectory_figure(traj, sc.design,
                                  os.path.join(outdir, "trajectory.svg"))
            metrics = _simulate_summary(sc, traj)
        elif command == "bound":
            ups = job_args.get("upsilons")
            ups = (list(np.linspace(0.05, 2.5, 100)) if ups is None
                   else [float(u) for u in ups])
            rows = _bound_rows(sc, ups,
                               beta_tilde=job_args.get("beta_tilde"),
                               oracle_grid=job_args.get("oracle_grid"))
            _write_rows(os.path.join(outdir, "bounds.csv"), rows,
                        ["upsilon", "alpha", "pi_star", "floor",
                         "oracle_value"])
            pis = [r["pi_star"] for r in rows]
            metrics = {"pi_star_min": min(pis), "pi_star_max": max(pis),
                       "floor": rows[0]["floor"],
                       "beta_star": sc.design.beta_star}
        else:
            raise ValidationError(f"unknown sweep command '{command}'")
        return name, "ok", metrics
    except Exception as exc:  # worker: report, don't crash the pool
        return name, f"failed: {exc}", {}


def cmd_sweep(args) -> int:
    with open(args.manifest, "rb") as fh:
        manifest = tomllib.load(fh)
    command = manifest.get("command", "simulate")
    jobs = manifest.get("jobs", [])
    out = _ensure_out(args.out)
    summary_path = os.path.join(out, "summary.csv")
    if not jobs:
        with open(summary_path, "w", newline="") as fh:
            csv.writer(fh).writerow(["job", "status"])
        print(f"empty manifest; wrote {summary_path}")
        return 0
    base_rel = manifest.get("base")
    if base_rel is None:
        raise ValidationError("sweep manifest is missing 'base'")
    base_path = os.path.join(os.path.dirname(os.path.abspath(args.manifest)),
                             base_rel)
    with open(base_path, "rb") as fh:
        base_doc = tomllib.load(fh)
    shared_args = manifest.get("args", {})

    payloads = []
    for job in jobs:
        name = job.get("name") or f"job{len(payloads)}"
        job_args = {**shared_args, **job.get("args", {})}
        payloads.append((name, command, base_doc, job.get("overrides", {}),
                         job_args, os.path.join(out, name)))

    workers = args.jobs or min(len(payloads), os.cpu_count() or 1)
    results = []
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_sweep_job, payloads))

    metric_cols = sorted({k for _, _, m in results for k in m})
    with open(summary_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["job", "status"] + metric_cols)
        for name, status, metrics in results:
            w.writerow([name, status]
                       + [repr(float(metrics[c])) if c in metrics else ""
                          for c in metric_cols])
    print(f"wrote {summary_path}")

    if command == "bound":
        curves = {}
        for name, status, _ in results:
            if status != "ok":
                continue
            with open(os.path.join(out, name, "bounds.csv")) as fh:
                rdr = csv.DictReader(fh)
                ups, pis = [], []
                for row in rdr:
                    ups.append(float(row["upsilon"]))
                    pis.append(float(row["pi_star"]))
                curves[name] = (ups, pis)
        if curves:
            from .plots import bound_overlay_figure
            overlay = os.path.join(out, "bounds_overlay.svg")
            bound_overlay_figure(curves, overlay)
            print(f"wrote {overlay}")

    failed = [name for name, status, _ in results if status != "ok"]
    for name, status, _ in results:
        print(f"  {name}: {status}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="epigame",
        description="Incentive design and closed-loop simulation for "
                    "epidemics coupled to population games")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="closed-form design report")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="integrate the closed loop")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--t-end", type=float, default=None, dest="t_end")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bound", help="certified overshoot table")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--upsilons", default=None,
                   help="comma-separated weights (default: 100-point grid)")
    p.add_argument("--beta-tilde", type=float, default=None, dest="beta_tilde",
                   help="override the initial rate gap used in the level")
    p.add_argument("--oracle-grid", type=int, default=None, dest="oracle_grid",
                   help="cross-check each row with the grid oracle")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("select-upsilon",
                       help="largest weight meeting an overshoot target")
    p.add_argument("--scenario", required=True)
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--tol-upsilon", type=float, default=1e-3,
                   dest="tol_upsilon")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_select_upsilon)

    p = sub.add_parser("sweep", help="run a manifest of jobs concurrently")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TargetBelowFloor, PreconditionViolated) as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"validation failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        state = getattr(exc, "state", None)
        if state is not None:
            print(f"state at failure: {state!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
