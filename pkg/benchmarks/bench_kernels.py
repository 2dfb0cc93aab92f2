"""Compiled vs pure-numpy kernel timings.

Runs both backends on the same inputs, checks that they agree, and prints the
best-of-``repeat`` wall time for each. Sizes mirror the Radon routes: a 4-D
Wigner lattice projected on a few frames, and binning of a 2-D lattice.

    python3 benchmarks/bench_kernels.py [--cells 31] [--frames 20] [--repeat 3] [--json out.json]
"""
import argparse
import json
import sys
import time

import numpy as np

from comtomo._kernels import _pykernels

try:
    from comtomo._kernels import _ckernels
except ImportError:
    _ckernels = None


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n_side, n_frames, rng):
    # ray characteristic: D = 4 lattice, a handful of frequencies per frame
    axis = np.linspace(-6.0, 6.0, n_side)
    mesh = np.meshgrid(*[axis] * 4, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.exp(-np.sum(coords**2, axis=1))
    directions = rng.uniform(-1.0, 1.0, size=(n_frames, 4))
    yield "ray_characteristic", (coords, weights, directions, 0.3, 8)
    # binning: a fine 2-D lattice projected on one direction
    axis = np.linspace(-8.0, 8.0, 40 * n_side)
    q, p = np.meshgrid(axis, axis, indexing="ij")
    s = (0.6 * q + 0.8 * p).ravel()
    w = np.exp(-(q**2 + p**2)).ravel()
    yield "radon_bin", (s, w, -12.0, 0.05, 481)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=31, help="lattice points per axis")
    ap.add_argument("--frames", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1

    rows = []
    for name, inputs in cases(args.cells, args.frames, np.random.default_rng(0)):
        t_py, r_py = best_time(lambda: getattr(_pykernels, name)(*inputs), args.repeat)
        t_c, r_c = best_time(lambda: getattr(_ckernels, name)(*inputs), args.repeat)
        a, b = (r_py[0], r_c[0]) if isinstance(r_py, tuple) else (r_py, r_c)
        diff = float(np.abs(np.asarray(a) - np.asarray(b)).max())
        rows.append({"kernel": name, "python_s": t_py, "cython_s": t_c, "speedup": t_py / t_c, "max_abs_diff": diff})

    print(f"{'kernel':<20}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max diff':>12}")
    for r in rows:
        print(f"{r['kernel']:<20}{r['python_s']:>12.4f}{r['cython_s']:>12.4f}{r['speedup']:>10.1f}{r['max_abs_diff']:>12.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
