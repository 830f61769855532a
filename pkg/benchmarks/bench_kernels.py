"""Compare the compiled and pure-Python kernel backends.

Usage: ``python benchmarks/bench_kernels.py [--repeat R]``.  Each kernel is
timed on both backends with identical inputs; outputs are checked to agree.
"""

import argparse
import itertools
import time

import numpy as np

from xyzot import kernels
from xyzot.heuristic import initial_state, run_sorting


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_sweep(mod, repeat, n=2000):
    rng = np.random.default_rng(0)
    base = rng.random((3, n))
    pi = rng.integers(0, n, n * n // 4)
    pj = rng.integers(0, n, n * n // 4)

    def run():
        cols = [np.ascontiguousarray(c.copy()) for c in base]
        return mod.sweep_product(*cols, pi, pj, 10 ** 12, 1e-12), cols[0].sum()
    return _time(run, repeat)


def bench_witness(mod, repeat, n=2000):
    tr = run_sorting(initial_state(n, 1)).triples
    cols = [np.ascontiguousarray(tr[:, a]) for a in range(3)]
    return _time(lambda: mod.witness_product(*cols, 1e-12), repeat)


def bench_brute(mod, repeat, n=6):
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64)
    return _time(lambda: mod.brute_force_range(perms, 0, len(perms)), repeat)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = kernels.available()
    print(f"backends: {', '.join(names)}")
    for label, bench in [("sweep (n=2000, n^2/4 pairs)", bench_sweep),
                         ("witness scan (n=2000, monotone)", bench_witness),
                         ("brute force (n=6)", bench_brute)]:
        timings = {}
        outputs = {}
        for name in names:
            timings[name], outputs[name] = bench(kernels.get(name), args.repeat)
        same = len({repr(o) for o in outputs.values()}) == 1
        row = "  ".join(f"{name}={timings[name] * 1e3:9.2f} ms" for name in names)
        speed = ""
        if "cython" in timings:
            speed = f"  speedup={timings['python'] / timings['cython']:7.1f}x"
        print(f"{label:34s} {row}{speed}  outputs agree={same}")


if __name__ == "__main__":
    main()
