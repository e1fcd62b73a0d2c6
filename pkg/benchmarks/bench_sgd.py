#!/usr/bin/env python3
"""Benchmark the compiled SGD kernel against the pure-numpy fallback.

Runs identical training passes through both backends on a synthetic
problem, checks that the resulting factors agree, and reports wall-clock
times plus the speedup.

    python3 benchmarks/bench_sgd.py [--users 2000] [--items 500] \
        [--interactions 60000] [--factors 10] [--passes 5]
"""

import argparse
import time

import numpy as np

from coldstart_rl import _sgd_python

try:
    from coldstart_rl import _sgd_cython
except ImportError:
    _sgd_cython = None


def build_problem(args, seed=0):
    rng = np.random.default_rng(seed)
    users = rng.integers(args.users, size=args.interactions).astype(np.int64)
    items = rng.integers(args.items, size=args.interactions).astype(np.int64)
    signals = rng.choice([-1, 1], size=args.interactions).astype(np.int8)
    orders = [
        rng.permutation(args.interactions).astype(np.int64) for _ in range(args.passes)
    ]
    user_factors = rng.uniform(-0.05, 0.05, size=(args.users, args.factors))
    item_factors = rng.uniform(-0.05, 0.05, size=(args.items, args.factors))
    return users, items, signals, orders, user_factors, item_factors


def run(kernel, problem, lr=0.001, reg=0.01):
    users, items, signals, orders, uf, itf = problem
    uf, itf = uf.copy(), itf.copy()
    start = time.perf_counter()
    for order in orders:
        kernel(uf, itf, users, items, signals, order, lr, reg)
    return time.perf_counter() - start, uf, itf


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--users", type=int, default=2000)
    parser.add_argument("--items", type=int, default=500)
    parser.add_argument("--interactions", type=int, default=60_000)
    parser.add_argument("--factors", type=int, default=10)
    parser.add_argument("--passes", type=int, default=5)
    args = parser.parse_args()

    problem = build_problem(args)
    updates = args.interactions * args.passes

    t_py, uf_py, itf_py = run(_sgd_python.sgd_pass, problem)
    print(f"python fallback: {t_py:8.3f}s  ({updates / t_py:,.0f} updates/s)")

    if _sgd_cython is None:
        print("compiled kernel: not built (pip install -e . with Cython available)")
        return

    t_cy, uf_cy, itf_cy = run(_sgd_cython.sgd_pass, problem)
    print(f"compiled kernel: {t_cy:8.3f}s  ({updates / t_cy:,.0f} updates/s)")
    print(f"speedup: {t_py / t_cy:.1f}x")

    np.testing.assert_allclose(uf_cy, uf_py, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(itf_cy, itf_py, rtol=1e-9, atol=1e-12)
    print("backends agree (rtol 1e-9)")


if __name__ == "__main__":
    main()
