"""Time the compiled kernels against their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs on identical inputs in both backends; outputs are checked
for bit identity before timings are reported.
"""
import argparse
import time

import numpy as np

from ldanneal import _pykernels as py
from ldanneal.instances import GeneratorSpec, generate_triangular

try:
    from ldanneal import _kernels as cx
except ImportError:  # pragma: no cover
    cx = None


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def ordered(res):
    """The k lowest come back in heap order; sort them for comparison."""
    a, b = res[0], res[1]
    o = np.lexsort((a, b))
    return (a[o], b[o]) + tuple(res[2:])


def cases():
    rng = np.random.default_rng(0)
    big = generate_triangular(20, 20, GeneratorSpec(seed=1))
    ei, ej, jv = big.edge_arrays
    hi, hv = big.bias_arrays
    indptr, nbr, w = big.csr
    states = rng.choice(np.array([-1, 1], dtype=np.int8), size=(2000, big.n_sites))
    sweeps = 50
    betas = np.geomspace(0.1, 10.0, sweeps)
    u = rng.random((sweeps, big.n_sites))
    s0 = states[0]

    def metro(mod):
        s = s0.copy()
        acc = mod.metropolis_sweeps(s, big.h_dense, indptr, nbr, w, betas, u)
        return s, acc

    small = generate_triangular(4, 4, GeneratorSpec(seed=2))
    a = small.edge_arrays + small.bias_arrays
    yield "energies 2000x400", lambda m: m.energies(states, ei, ej, jv, hi, hv)
    yield "local_fields 400", lambda m: m.local_fields(s0, big.h_dense, indptr, nbr, w)
    yield f"metropolis {sweeps} sweeps x 400", metro
    yield "enumerate 2^16", lambda m: ordered(m.enumerate_lowest(16, 0, 1 << 16, 4, *a))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if cx is None:
        print("compiled extension not built; nothing to compare")
        return
    print(f"{'kernel':<28}{'python s':>12}{'compiled s':>12}{'speedup':>10}  identical")
    for name, fn in cases():
        tp, op = best_time(lambda: fn(py), args.repeat)
        tc, oc = best_time(lambda: fn(cx), args.repeat)
        print(f"{name:<28}{tp:>12.4f}{tc:>12.5f}{tp / tc:>10.1f}  {same(op, oc)}")


if __name__ == "__main__":
    main()
