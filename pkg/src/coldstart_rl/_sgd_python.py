"""Pure-numpy fallback for the SGD inner loop.

Same contract as the compiled kernel in ``_sgd_cython.pyx``: one full pass of
per-sample updates, in the given order, mutating both factor matrices in
place. Roughly two orders of magnitude slower than the compiled version (see
``benchmarks/bench_sgd.py``); results agree to floating-point noise, the only
difference being dot-product summation order.
"""

import numpy as np


def sgd_pass(user_factors, item_factors, users, items, signals, order, lr, reg):
    # Overflow is not an error here: divergence detection happens in the
    # caller, matching the compiled kernel's silent IEEE semantics.
    with np.errstate(over="ignore", invalid="ignore"):
        for idx in order:
            u = users[idx]
            i = items[idx]
            pu = user_factors[u]
            qi = item_factors[i]
            err = signals[idx] - float(pu @ qi)
            new_pu = pu + lr * (err * qi - reg * pu)
            new_qi = qi + lr * (err * pu - reg * qi)
            user_factors[u] = new_pu
            item_factors[i] = new_qi
