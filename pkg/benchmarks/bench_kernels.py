"""Compiled vs pure-Python RK4 kernel on Lorenz and stacked-rotated Lorenz systems.

    python benchmarks/bench_kernels.py [--t-final 5] [--repeats 3] [--csv out.csv]

Prints one row per (system, backend) with the best wall time over the repeats
and the max deviation between the two backends' final states.
"""

import argparse
import csv
import sys
import time

import numpy as np

from trapdyn import kernels, sim, systems


def best_time(fn, repeats):
    best, out = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-final", type=float, default=5.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args(argv)

    if kernels.compiled_rk4 is None:
        print("compiled kernel not built; only the Python fallback is available", file=sys.stderr)

    cases = [("lorenz", systems.lorenz())]
    for K in (4, 16):
        cases.append((f"stacked K={K}", systems.stacked_lorenz(K, 1)[0]))

    rows = []
    for name, s in cases:
        x0 = np.random.default_rng(0).uniform(-10, 10, s.n)
        finals = {}
        for label, fn in (("cython", kernels.compiled_rk4), ("python", kernels.python_rk4)):
            if fn is None:
                continue
            t, tr = best_time(lambda: sim.integrate(s, x0, args.t_final, args.dt, backend=fn),
                              args.repeats)
            finals[label] = tr.final
            steps = tr.states.shape[0] - 1
            rows.append({"system": name, "n": s.n, "backend": label, "steps": steps,
                         "seconds": t, "us_per_step": 1e6 * t / steps})
        dev = (float(np.max(np.abs(finals["cython"] - finals["python"])))
               if len(finals) == 2 else float("nan"))
        speedup = (rows[-1]["seconds"] / rows[-2]["seconds"]) if len(finals) == 2 else float("nan")
        for r in rows[-len(finals):]:
            r["max_final_dev"] = dev
        print(f"{name:14s} n={s.n:3d}  " + "  ".join(
            f"{r['backend']}={r['seconds']:.4f}s" for r in rows[-len(finals):])
            + f"  speedup={speedup:.0f}x  max|dx|={dev:.1e}")

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
