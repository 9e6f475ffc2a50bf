"""Compare the compiled and pure-Python convolution kernels.

Run from the repository root after an editable install::

    python3 benchmarks/bench_convolve.py --grid 24 32 --points 16
"""
import argparse
import time

import numpy as np

from ncresidue import osculating
from ncresidue import _kernels_py
from ncresidue.osculating import GridFunction, OsculatingGroup

try:
    from ncresidue import _kernels
except ImportError:  # extension not built
    _kernels = None


def gauss(centre, w):
    c = np.asarray(centre, dtype=float)
    return lambda p: np.exp(-np.sum((p - c) ** 2, axis=-1) / w**2)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench(grid: int, n_points: int, repeat: int) -> dict:
    G = OsculatingGroup.heisenberg(1)
    f = GridFunction.sample(gauss([0.3, -0.2, 0.1], 0.5), (4, 4, 4), grid)
    g = GridFunction.sample(gauss([-0.1, 0.2, 0.0], 0.5), (4, 4, 4), grid)
    xs = np.random.default_rng(0).uniform(-0.5, 0.5, (n_points, 3))
    row = {"grid": grid, "points": n_points}
    saved = osculating._backend
    try:
        for name, mod in (("python", _kernels_py), ("cython", _kernels)):
            if mod is None:
                continue
            osculating._backend = mod
            row[name], row[name + "_out"] = best_of(lambda: osculating.convolve_at(G, f, g, xs), repeat)
    finally:
        osculating._backend = saved
    if "cython" in row:
        row["max_diff"] = float(np.max(np.abs(row["cython_out"] - row["python_out"])))
    return row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, nargs="+", default=[24, 32, 48])
    ap.add_argument("--points", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; timing the Python kernel only")
    print(f"{'grid':>6} {'points':>6} {'python s':>10} {'cython s':>10} {'speedup':>8} {'max diff':>10}")
    for grid in args.grid:
        r = bench(grid, args.points, args.repeat)
        cy = r.get("cython", float("nan"))
        print(f"{grid:>6} {args.points:>6} {r['python']:>10.4f} {cy:>10.4f} {r['python'] / cy:>8.1f} "
              f"{r.get('max_diff', float('nan')):>10.2e}")


if __name__ == "__main__":
    main()
