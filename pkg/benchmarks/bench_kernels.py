"""Time the compiled kernels against their numpy / plain-Python twins.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --size 60 --repeat 5
    python3 benchmarks/bench_kernels.py --json results.json

The dp, smoothing and sampling kernels are compared in-process against
their numpy twins.  Annealing has no twin, so its fallback runs in a child
process with ``GRIDPART_DISABLE_NUMBA=1``.
Outputs of each pair are compared before timing is reported.
"""

import argparse
import json
import math
import os
import subprocess
import sys
import time

import numpy as np

from gridpart import _kernels
from gridpart._accel import NUMBA_ENABLED
from gridpart.dp import BalanceMode, _tolerance, dynamic_partition
from gridpart.grid import GridGraph, snake_ordering
from gridpart.stochastic import _tables, poisson_truncated
from gridpart.synth import smoothing_kernel, sparse_smoothed_field


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_dp(size, repeat):
    w = sparse_smoothed_field(size, size, 7, bernoulli_p=0.1)
    g = GridGraph("hex", size, size, w.reshape(-1))
    k = max(2, size * size // 100)
    order = snake_ordering(g, max(1, round(math.sqrt(size * size / k)))).order
    avg = g.total_weight / k
    lo, hi = BalanceMode(0.05).bounds(avg)
    args = (order, g.nbrs, g.degree, np.ascontiguousarray(g.weights[order]), k, lo, hi, _tolerance(avg))
    t_jit, a = best_of(lambda: _kernels.dp_sweep_jit(*args), repeat)
    t_np, b = best_of(lambda: _kernels.dp_sweep_numpy(*args), repeat)
    same = np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    return t_jit, t_np, same


def bench_smooth(size, repeat):
    rng = np.random.default_rng(0)
    f = rng.random((size, size)) * (rng.random((size, size)) < 0.02)
    ker = smoothing_kernel(3)
    t_jit, a = best_of(lambda: _kernels.smooth_field_jit(f, ker, 10), repeat)
    t_np, b = best_of(lambda: _kernels.smooth_field_numpy(f, ker, 10), repeat)
    return t_jit, t_np, bool(np.allclose(a, b, rtol=1e-12, atol=1e-15))


def bench_mc(size, repeat):
    n = size * size
    dists = [poisson_truncated(3.0 + (v % 7), 40) for v in range(n)]
    cdf, vals, natoms = _tables(dists)
    labels = (np.arange(n) * 10 // n).astype(np.int64)
    u = np.random.default_rng(1).random((2000, n))
    t_jit, a = best_of(lambda: _kernels.mc_part_sums_jit(u, cdf, vals, natoms, labels, 10), repeat)
    t_np, b = best_of(lambda: _kernels.mc_part_sums_numpy(u, cdf, vals, natoms, labels, 10), repeat)
    return t_jit, t_np, bool(np.allclose(a, b, rtol=1e-12))


ANNEAL_SCRIPT = """
import hashlib, json, sys, time
from gridpart.anneal import AnnealConfig, anneal
from gridpart.dp import BalanceMode, dynamic_partition
from gridpart.grid import GridGraph, snake_ordering
from gridpart.synth import sparse_smoothed_field
side, repeat = int(sys.argv[1]), int(sys.argv[2])
w = sparse_smoothed_field(side, side, 7, bernoulli_p=0.1)
g = GridGraph("hex", side, side, w.reshape(-1))
p = dynamic_partition(g, snake_ordering(g, 4), 4, BalanceMode(0.1)).partition
cfg = AnnealConfig(eps=0.1, seed=0, max_run=3, max_iters=2000, no_improve_window=2000)
best = float("inf")
for _ in range(repeat):
    t0 = time.perf_counter()
    r = anneal(g, p, cfg)
    best = min(best, time.perf_counter() - t0)
digest = hashlib.sha256(r.final.labels.tobytes() + r.trace.tobytes()).hexdigest()
print(json.dumps({"seconds": best, "digest": digest}))
"""


def _anneal_run(side, repeat, disable):
    env = dict(os.environ, GRIDPART_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", ANNEAL_SCRIPT, str(side), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def bench_anneal(size, repeat):
    # the fallback must not see any compiled helper, so each side gets its own
    # process; plain Python is slow, hence the small grid
    side = min(size, 16)
    _anneal_run(side, 1, False)
    fast = _anneal_run(side, repeat, False)
    slow = _anneal_run(side, 1, True)
    return fast["seconds"], slow["seconds"], fast["digest"] == slow["digest"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=100, help="grid side length")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args()
    if not NUMBA_ENABLED:
        raise SystemExit("numba is disabled (GRIDPART_DISABLE_NUMBA); nothing to compare")

    # compile everything once so timings exclude the jit
    for fn in (bench_dp, bench_smooth, bench_mc):
        fn(8, 1)

    rows = []
    print(f"{'kernel':<10} {'jit s':>10} {'fallback s':>12} {'speedup':>9}  match")
    for name, fn in (("dp", bench_dp), ("smooth", bench_smooth), ("mc", bench_mc), ("anneal", bench_anneal)):
        t_jit, t_fb, same = fn(args.size, args.repeat)
        rows.append({"kernel": name, "jit_s": t_jit, "fallback_s": t_fb, "match": same})
        print(f"{name:<10} {t_jit:>10.4f} {t_fb:>12.4f} {t_fb / t_jit:>8.1f}x  {'yes' if same else 'NO'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"size": args.size, "results": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
