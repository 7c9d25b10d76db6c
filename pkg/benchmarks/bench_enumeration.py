#!/usr/bin/env python3
"""Benchmark: compiled enumeration kernels vs the pure-numpy fallback.

Times the full-configuration log partition sum and the pair-overlap lattice
sweep on random instances of growing size, verifying agreement as it goes.

    python benchmarks/bench_enumeration.py [--pair-max 12] [--single-max 20]
"""

import argparse
import time

import numpy as np

from mskphase import _enumeration_py as pure
from mskphase import enumeration


def _problem(rng, n, species=2):
    quad = np.ascontiguousarray(rng.normal(0, 0.3, (n, n)))
    lin = np.ascontiguousarray(rng.normal(0, 0.5, n))
    sizes = rng.multinomial(n - species, np.full(species, 1.0 / species)) + 1
    index = np.repeat(np.arange(species), sizes).astype(np.int64)
    return quad, lin, index, sizes.astype(np.int64)


def _time(fn, *args, repeats=3):
    best = np.inf
    value = None
    for _ in range(repeats):
        start = time.perf_counter()
        value = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, value


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--single-max", type=int, default=20)
    parser.add_argument("--pair-max", type=int, default=12)
    args = parser.parse_args()

    if not enumeration.COMPILED:
        print("warning: compiled backend not available; comparing fallback to itself")
    rng = np.random.default_rng(0)

    print(f"{'kernel':<22}{'N':>4}{'compiled [s]':>14}{'pure [s]':>12}{'speedup':>9}  agreement")
    for n in range(10, args.single_max + 1, 2):
        quad, lin, _, _ = _problem(rng, n)
        t_c, v_c = _time(enumeration.log_partition, quad, lin)
        t_p, v_p = _time(pure.log_partition, quad, lin, repeats=1)
        print(
            f"{'log_partition':<22}{n:>4}{t_c:>14.4f}{t_p:>12.4f}{t_p / t_c:>9.1f}"
            f"  |diff|={abs(v_c - v_p):.1e}"
        )
    for n in range(6, args.pair_max + 1, 2):
        quad, lin, index, sizes = _problem(rng, n)
        t_c, v_c = _time(enumeration.pair_cell_logsumexp, quad, lin, index, sizes)
        t_p, v_p = _time(pure.pair_cell_logsumexp, quad, lin, index, sizes, repeats=1)
        mask = np.isfinite(v_c)
        worst = float(np.max(np.abs(v_c[mask] - v_p[mask])))
        print(
            f"{'pair_cell_logsumexp':<22}{n:>4}{t_c:>14.4f}{t_p:>12.4f}{t_p / t_c:>9.1f}"
            f"  |diff|={worst:.1e}"
        )


if __name__ == "__main__":
    main()
