"""Benchmark the compiled (Cython) sweep kernel against the numpy twin.

Runs the same Brillouin-zone dynamics sweep through both backends,
reports wall time and speedup, and verifies the two produce matching
currents.

Usage: python3 benchmarks/bench_backends.py [--n 60] [--t-max 50]
"""

import argparse
import time

import numpy as np

from crystal_current import HaldaneModel, make_grid
from crystal_current._kernels import get_backend, occupation_2band


def run_sweep(sweep_chunk, arrs, pts, occ, eps, e_beta, e_alpha, times, dt):
    acc = np.zeros(len(times))
    chunk = 2048
    for i in range(0, len(pts), chunk):
        sl = slice(i, min(i + chunk, len(pts)))
        rows = sweep_chunk(arrs, pts[sl], occ[sl], eps, e_beta, e_alpha,
                           times, dt)
        acc += np.sum(np.asarray(rows), axis=0)
    return acc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60, help="grid points per side")
    ap.add_argument("--t-max", type=float, default=50.0)
    ap.add_argument("--dt", type=float, default=0.01)
    args = ap.parse_args()

    model = HaldaneModel(1.0, -1.0)
    lat = model.lattice
    grid = make_grid(lat, args.n)
    times = np.arange(0.0, args.t_max + 1e-9, 0.5)
    arrs = model.planewave_terms().arrays()
    occ = occupation_2band(arrs, grid.points, 0.0)
    eps, e_beta, e_alpha = 1e-3, lat.b1, lat.b2

    results = {}
    for name in ("cython", "python"):
        try:
            sweep = get_backend(name)
        except (ImportError, ValueError) as exc:
            print(f"{name:>7}: unavailable ({exc})")
            continue
        t0 = time.perf_counter()
        acc = run_sweep(sweep, arrs, grid.points, occ, eps, e_beta,
                        e_alpha, times, args.dt)
        elapsed = time.perf_counter() - t0
        results[name] = (elapsed, acc)
        steps = len(grid.points) * args.t_max / args.dt
        print(f"{name:>7}: {elapsed:8.3f} s   "
              f"({steps / elapsed / 1e6:.1f} M substeps/s)")

    if len(results) == 2:
        (tc, ac), (tp, ap_) = results["cython"], results["python"]
        diff = np.max(np.abs(ac - ap_))
        print(f"speedup: {tp / tc:.1f}x   max |difference|: {diff:.2e}")
        if diff > 1e-9 * max(np.max(np.abs(ac)), 1.0):
            raise SystemExit("backends disagree")


if __name__ == "__main__":
    main()
