"""Timing comparison of the plan-application kernels.

Runs identical packed product-formula plans through the pure-numpy kernel
and, when built, the compiled one, checks they agree, and prints a small
table with the speedup.  Sizes are chosen so per-step work is tiny and the
step loop dominates, which is the regime the compiled kernel targets.

Usage: python3 benchmarks/bench_kernels.py [--dim 256] [--pieces 6]
       [--k 2] [--r 200] [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hamsim import _kernels, numerics, suzuki
from hamsim.one_sparse import pack_tables, random_one_sparse_table


def run(kernel, packed, plan, t, r, psi):
    out = psi.copy()
    step_term = np.fromiter((s.term - 1 for s in plan.steps), dtype=np.int64,
                            count=len(plan.steps))
    step_s = np.fromiter((s.fraction * t / r for s in plan.steps),
                         dtype=np.float64, count=len(plan.steps))
    kernel(out, packed.diag_ptr, packed.diag_idx, packed.diag_h,
           packed.pair_ptr, packed.pair_lo, packed.pair_hi, packed.pair_absa,
           packed.pair_u, step_term, step_s, r)
    return out


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=256)
    ap.add_argument("--pieces", type=int, default=6)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--r", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    tables = [random_one_sparse_table(args.dim, seed=100 + i)
              for i in range(args.pieces)]
    packed = pack_tables(tables)
    plan = suzuki.build_plan(args.k, args.pieces)
    psi = numerics.random_state(args.dim, np.random.default_rng(0))
    steps = args.r * len(plan.steps)
    print(f"dim={args.dim} pieces={args.pieces} k={args.k} r={args.r} "
          f"-> {steps} piece sweeps per call")

    results = {}
    timings = {}
    for name in _kernels.available_backends():
        kernel = _kernels.get_kernel(name)
        best = float("inf")
        for _ in range(args.repeats):
            start = time.perf_counter()
            out = run(kernel, packed, plan, 1.0, args.r, psi)
            best = min(best, time.perf_counter() - start)
        results[name] = out
        timings[name] = best
        print(f"  {name:3s}  best of {args.repeats}: {best * 1e3:9.3f} ms "
              f"({steps / best:,.0f} sweeps/s)")

    if "cy" in results:
        agree = np.linalg.norm(results["py"] - results["cy"])
        print(f"  backends agree to {agree:.2e}")
        print(f"  speedup: {timings['py'] / timings['cy']:.1f}x")
        if agree > 1e-10:
            print("  MISMATCH above tolerance")
            return 1
    else:
        print("  compiled kernel not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
