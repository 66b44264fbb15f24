"""Compare the compiled and pure-Python persistence kernels.

    python3 benchmarks/bench_rips.py [--channels 16 32] [--max-order 2 3] [--repeat 5]

Times ``rips_pairs`` on correlation graphs of random windows and checks
that both kernels return identical pairs.
"""

import argparse
import sys
import time

import numpy as np

from tada import _rips_py
from tada.timeseries import correlation_similarity

try:
    from tada import _rips
except ImportError:
    _rips = None


def random_graph(d, rng, length=500):
    sim, _ = correlation_similarity(rng.standard_normal((length, d)))
    return sim


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def same_pairs(a, b):
    return all(
        all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(pa, pb))
        for pa, pb in zip(a, b)
    )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--channels", type=int, nargs="+", default=[8, 16, 24])
    ap.add_argument("--max-order", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _rips is None:
        print("compiled kernel not built; only the Python kernel is available", file=sys.stderr)

    rng = np.random.default_rng(args.seed)
    print(f"{'D':>4} {'p':>2} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}  equal")
    for d in args.channels:
        w = random_graph(d, rng)
        for p in args.max_order:
            if p + 1 > d:
                continue
            t_py, out_py = best_of(lambda: _rips_py.rips_pairs(w, p), args.repeat)
            if _rips is None:
                print(f"{d:>4} {p:>2} {1e3 * t_py:>12.2f} {'-':>12} {'-':>8}  -")
                continue
            t_c, out_c = best_of(lambda: _rips.rips_pairs(w, p), args.repeat)
            print(f"{d:>4} {p:>2} {1e3 * t_py:>12.2f} {1e3 * t_c:>12.2f} {t_py / t_c:>7.1f}x  {same_pairs(out_py, out_c)}")


if __name__ == "__main__":
    main()
