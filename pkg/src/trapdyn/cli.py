"""Command-line front end.

Exit codes (stable; scripts may branch on them):

    0  success / trapping region exists
    1  no trapping region (check, radius) or not every trajectory trapped (simulate)
    2  numerically marginal
    3  malformed input file
    4  usage error
    5  any other failure
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import oracle, sim, systems
from .conic import SolverOptions
from .errors import LosslessError, SystemFormatError, TrapdynError
from .model import (
    load_system,
    lossless_defect,
    shift,
    system_to_json,
)
from .opt import TrappingStatus, analyze, solve_existence, tight_radius_sdp

log = logging.getLogger("trapdyn")

EXIT_OK, EXIT_NO_TRAP, EXIT_MARGINAL, EXIT_PARSE, EXIT_USAGE, EXIT_ERROR = range(6)
STATUS_EXIT = {
    TrappingStatus.TRAPPING_EXISTS: EXIT_OK,
    TrappingStatus.NO_TRAPPING_REGION: EXIT_NO_TRAP,
    TrappingStatus.NUMERICALLY_MARGINAL: EXIT_MARGINAL,
}
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    env = os.environ.get("TRAPDYN_SEED")
    return int(env) if env else DEFAULT_SEED


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse numbers from {text!r}") from exc


def _parse_center(text: str | None, n: int):
    if text is None or text == "auto":
        return "auto"
    if text == "zero":
        return "zero"
    vals = _floats(text)
    if len(vals) != n:
        raise UsageError(f"--center needs {n} comma-separated values, got {len(vals)}")
    return np.array(vals)


def _parse_box(text: str | None, n: int, center: np.ndarray, R: float):
    if text is None:
        half = max(3.0, 2.0 * R)
        return center - half, center + half
    parts = text.split(",")
    bounds = []
    for p in parts:
        try:
            lo, hi = (float(v) for v in p.split(":"))
        except ValueError as exc:
            raise UsageError(f"bad --box entry {p!r}; expected lo:hi") from exc
        bounds.append((lo, hi))
    if len(bounds) == 1:
        bounds = bounds * n
    if len(bounds) != n:
        raise UsageError(f"--box needs 1 or {n} lo:hi entries")
    lo, hi = np.array(bounds).T
    return lo, hi


def _solver_options(args) -> SolverOptions:
    opts = SolverOptions()
    if args.solver_tol is not None:
        t = args.solver_tol
        opts = replace(opts, abstol=t, reltol=t, feastol=t)
    if args.eps_neg is not None:
        opts = replace(opts, eps_neg=args.eps_neg)
    return opts


def _fmt_vec(v) -> str:
    return "[" + ", ".join(f"{x:.6g}" for x in np.asarray(v).ravel()) + "]"


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args) -> int:
    system = load_system(args.file)
    opts = _solver_options(args)
    ex = solve_existence(system, opts)
    print(f"lossless defect: {lossless_defect(system):.3e}")
    print(f"a*: {ex.a_star:.10g}")
    print(f"status: {ex.status.value}")
    if ex.exists:
        print(f"m*: {_fmt_vec(ex.m_star)}")
        if ex.free_directions:
            print(f"note: optimal shift is not unique ({ex.free_directions} free direction(s))")
    elif ex.certificate is not None:
        print("certificate Z:")
        for row in ex.certificate:
            print("  " + _fmt_vec(row))
    if args.json:
        doc = {
            "status": ex.status.value,
            "a_star": ex.a_star,
            "m_star": ex.m_star.tolist(),
            "certificate": None if ex.certificate is None else ex.certificate.tolist(),
            "solver": ex.solver,
        }
        Path(args.json).write_text(json.dumps(doc, indent=2) + "\n")
    return STATUS_EXIT[ex.status]


def cmd_radius(args) -> int:
    system = load_system(args.file)
    opts = _solver_options(args)
    center = _parse_center(args.center, system.n)
    t0 = time.perf_counter()
    rep = analyze(system, center, opts)
    wall = time.perf_counter() - t0
    ex = rep.existence
    if not rep.bounded:
        print(f"status: {ex.status.value} (a* = {ex.a_star:.6g}); no trapping region to size")
        return STATUS_EXIT[ex.status]

    rg = rep.region
    print(f"a*: {ex.a_star:.10g}")
    print(f"center m: {_fmt_vec(rg.m)}")
    print(f"R_conservative: {rg.R_conservative:.10g}")
    print(f"R_tight: {rg.R_tight:.10g}")
    if rg.lambda_star is None:
        print("d(m) = 0: m is a globally stable equilibrium")
    else:
        print(f"R_tight (dual SDP): {rg.R_tight_sdp:.10g}")
        print(f"lambda*: {rg.lambda_star:.10g}")
        sp = rep.sphere
        print(f"critical sphere: dimension {sp.dimension}, radius {sp.radius:.6g}, "
              f"center (shifted) {_fmt_vec(sp.center)}")
        for p in sp.extreme_points():
            print(f"  x* = {_fmt_vec(p + rg.m)}   (y* = {_fmt_vec(p)})")
    print(f"ultimate bound (original coordinates): {rg.ultimate_bound_original:.10g}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = rep.to_dict()
    doc["wall_time_s"] = wall
    (out / "report.json").write_text(json.dumps(doc, indent=2) + "\n")
    if not rep.ellipsoid.degenerate:
        pts = oracle.sample_E_boundary(rep.ellipsoid, args.samples, args.seed) + rg.m
        header = ",".join(f"x{i + 1}" for i in range(system.n))
        np.savetxt(out / "ellipsoid_boundary.csv", pts, delimiter=",", fmt="%.17g",
                   header=header, comments="")
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


def _simulate_one(job):
    system, x0, t_final, dt, m, R, settle, path = job
    try:
        traj = sim.integrate(system, x0, t_final, dt)
    except TrapdynError as exc:
        return {"x0": list(map(float, x0)), "trapped": False, "error": str(exc)}
    sim.write_trajectory_csv(traj, m, path)
    sf = shift(system, m)
    viol = sim.monotonicity_outside(traj, sf, R)
    return {
        "x0": list(map(float, x0)),
        "trapped": sim.check_ultimate_bound(traj, m, R, settle),
        "final_distance": float(np.linalg.norm(traj.final - m)),
        "max_rate_outside": viol,
        "csv": str(path),
    }


def cmd_simulate(args) -> int:
    system = load_system(args.file)
    opts = _solver_options(args)
    center = _parse_center(args.center, system.n)
    if args.radius is None or isinstance(center, str):
        rep = analyze(system, center, opts)
        if not rep.bounded:
            print(f"status: {rep.existence.status.value}; give --center and --radius explicitly")
            return STATUS_EXIT[rep.existence.status]
        m = rep.region.m
        R = rep.region.R_tight if args.radius is None else args.radius
    else:
        m, R = center, args.radius
    if args.n_traj < 1 or args.t_final <= 0 or args.dt <= 0:
        raise UsageError("--n-traj, --t-final and --dt must be positive")
    settle = args.settle if args.settle is not None else 0.5 * args.t_final
    if settle >= args.t_final:
        raise UsageError("--settle must be below --t-final")
    lo, hi = _parse_box(args.box, system.n, m, R)
    x0s = sim.random_initial_conditions(args.n_traj, lo, hi, args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(system, x0, args.t_final, args.dt, m, R, settle, out / f"traj_{i:03d}.csv")
            for i, x0 in enumerate(x0s)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_simulate_one, jobs))
    else:
        results = [_simulate_one(j) for j in jobs]

    trapped = sum(r["trapped"] for r in results)
    for i, r in enumerate(results):
        if "error" in r:
            print(f"traj {i:03d}: FAILED ({r['error']})")
        else:
            print(f"traj {i:03d}: trapped={r['trapped']} final |x-m|={r['final_distance']:.6g}")
    print(f"{trapped}/{len(results)} trajectories trapped in B(m, {R:.6g}) after t={settle:g}")
    summary = {
        "m": np.asarray(m).tolist(), "R": R, "settle_time": settle, "seed": args.seed,
        "t_final": args.t_final, "dt": args.dt, "box_low": lo.tolist(), "box_high": hi.tolist(),
        "trapped": trapped, "total": len(results), "trajectories": results,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK if trapped == len(results) else EXIT_NO_TRAP


def cmd_gen(args) -> int:
    name = args.name
    if name == "two-state":
        system = systems.two_state()
    elif name == "lorenz":
        system = systems.lorenz(args.sigma, args.rho, args.alpha)
    elif name == "stacked":
        system, _ = systems.stacked_lorenz(args.k, args.seed)
    elif name == "zero":
        system = systems.zero_system(args.n)
    else:  # argparse restricts choices; kept for direct callers
        raise UsageError(f"unknown system {name!r}")
    text = system_to_json(system)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return EXIT_OK


def _bench_trial(job):
    K, trial, seed = job
    row = {"K": K, "n": 3 * K, "trial": trial, "seed": seed}
    try:
        system, _ = systems.stacked_lorenz(K, seed)
        t0 = time.perf_counter()
        ex = solve_existence(system)
        t1 = time.perf_counter()
        sf = shift(system, ex.m_star)
        R, _, _ = tight_radius_sdp(sf)
        t2 = time.perf_counter()
        row.update(t_sdp1=t1 - t0, t_sdp2=t2 - t1, a_star=ex.a_star, R_tight=R,
                   status=ex.status.value)
    except (MemoryError, TrapdynError) as exc:
        row.update(t_sdp1=float("nan"), t_sdp2=float("nan"), a_star=float("nan"),
                   R_tight=float("nan"), status=f"failed: {exc.__class__.__name__}")
    return row


def bench_rows(k_list, trials: int, seed: int, jobs: int = 1) -> list[dict]:
    work = [(K, t, seed + t) for K in k_list for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_bench_trial, work))
    return [_bench_trial(w) for w in work]


def scaling_slope(rows: list[dict]) -> float | None:
    """Log-log slope of median total solve time against n over the upper half of n values."""
    by_n: dict[int, list[float]] = {}
    for r in rows:
        t = r["t_sdp1"] + r["t_sdp2"]
        if np.isfinite(t):
            by_n.setdefault(r["n"], []).append(t)
    ns = sorted(by_n)
    top = ns[len(ns) // 2:]
    if len(top) < 2:
        return None
    x = np.log([float(n) for n in top])
    y = np.log([statistics.median(by_n[n]) for n in top])
    return float(np.polyfit(x, y, 1)[0])


def cmd_bench(args) -> int:
    k_list = [int(v) for v in args.k.split(",") if v.strip()] if args.k else []
    if not k_list:
        raise UsageError("--k needs at least one value")
    if any(k < 1 for k in k_list) or args.trials < 1:
        raise UsageError("K values and --trials must be positive")
    rows = bench_rows(k_list, args.trials, args.seed, args.jobs)
    fields = ["K", "n", "trial", "seed", "t_sdp1", "t_sdp2", "a_star", "R_tight", "status"]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items()})
    for r in rows:
        print(f"K={r['K']:4d} n={r['n']:4d} trial={r['trial']} a*={r['a_star']:.8g} "
              f"R*={r['R_tight']:.6g} t1={r['t_sdp1']:.4f}s t2={r['t_sdp2']:.4f}s {r['status']}")
    slope = scaling_slope(rows)
    if slope is not None:
        print(f"empirical scaling exponent (upper half of n): {slope:.2f}")
    print(f"seed {args.seed}; wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default_seed(),
                        help="random seed (default 42, or $TRAPDYN_SEED)")
    common.add_argument("--eps-neg", type=float, default=None,
                        help=f"strict-negativity margin for a* (default {SolverOptions.eps_neg})")
    common.add_argument("--solver-tol", type=float, default=None,
                        help=f"SDP abs/rel/feasibility tolerance (default {SolverOptions.abstol})")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for ensembles and bench trials")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="trapdyn", description="Trapping regions for lossless quadratic systems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", parents=[common], help="decide whether a trapping region exists")
    c.add_argument("file")
    c.add_argument("--json", help="also write the existence result as JSON")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("radius", parents=[common], help="conservative and tight radii, critical points")
    r.add_argument("file")
    r.add_argument("--center", default="auto", help="auto | zero | comma-separated shift")
    r.add_argument("--out", default="trapdyn_out")
    r.add_argument("--samples", type=int, default=2000, help="ellipsoid boundary samples in the CSV")
    r.set_defaults(func=cmd_radius)

    s = sub.add_parser("simulate", parents=[common], help="integrate an ensemble and check trapping")
    s.add_argument("file")
    s.add_argument("--center", default="auto")
    s.add_argument("--radius", type=float, default=None, help="default: tight radius at the center")
    s.add_argument("--n-traj", type=int, default=10)
    s.add_argument("--t-final", type=float, default=50.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--settle", type=float, default=None, help="default: t_final / 2")
    s.add_argument("--box", default=None,
                   help="initial-condition box, lo:hi or one lo:hi per axis (default: center +/- max(3, 2R))")
    s.add_argument("--out", default="trapdyn_sim")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gen", parents=[common], help="write an example system file")
    g.add_argument("name", choices=["two-state", "lorenz", "stacked", "zero"])
    g.add_argument("--n", type=int, default=3, help="dimension of the zero system")
    g.add_argument("--k", type=int, default=1, help="number of stacked Lorenz copies")
    g.add_argument("--sigma", type=float, default=systems.SIGMA)
    g.add_argument("--rho", type=float, default=systems.RHO)
    g.add_argument("--alpha", type=float, default=systems.ALPHA)
    g.add_argument("--out", default=None, help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", parents=[common], help="time both SDPs on stacked-rotated Lorenz systems")
    b.add_argument("--k", default="1,2,4,8,16", help="comma-separated K values")
    b.add_argument("--trials", type=int, default=3)
    b.add_argument("--out", default="bench.csv")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"trapdyn: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SystemFormatError, LosslessError, FileNotFoundError) as exc:
        print(f"trapdyn: cannot read system: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except TrapdynError as exc:
        print(f"trapdyn: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
