"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from coalweb import kernels
from coalweb.rng import derive_seeds


def cases(k):
    seeds = np.asarray(derive_seeds(1, 128), dtype=np.uint64)
    ii = np.arange(-500_000, 500_000, 2, dtype=np.int64)
    jj = np.zeros_like(ii)
    sites = np.arange(0, 50, 2, dtype=np.int64)
    return {
        "arrows 5e5 points": lambda: k.arrows(7, ii, jj),
        "walk_finals 128 x 25 walkers x 2500 rows": lambda: k.walk_finals(seeds, sites, 0, 2500, 1, 0, 0, 0),
        "meet_rows 128 pairs x 2500 rows": lambda: k.meet_rows(seeds, 0, 50, 0, 2500),
        "tightness_hits 128 fields, tau = 100": lambda: k.tightness_hits(seeds, 0.5, 5.0, 0.0, 100.0, 20.0),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    py = kernels.backend("python")
    try:
        cc = kernels.backend("compiled")
    except ImportError:
        print("compiled extension not built; only timing the numpy kernels")
        cc = None
    print(f"{'kernel':45s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    pc = cases(py)
    cc_cases = cases(cc) if cc else {}
    for name, fn in pc.items():
        tp = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        if cc:
            tc = min(timeit.repeat(cc_cases[name], number=1, repeat=args.repeat))
            print(f"{name:45s} {tp:10.4f} {tc:11.4f} {tp / tc:7.1f}x")
        else:
            print(f"{name:45s} {tp:10.4f}")


if __name__ == "__main__":
    main()
