"""Time the numba kernels against the numpy fallback.

Run: python benchmarks/bench_kernels.py [--repeat N]
Compilation is excluded (one warm-up call per kernel).
"""

import argparse
import time

import numpy as np

from bregvi._kernels import implementation
from bregvi.verify import philox_rng


def best_of(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    rng = philox_rng(0)
    s257 = np.arange(257) / 256
    s2049 = np.arange(2049) / 2048
    for d in (2, 20, 200):
        star, delta = rng.uniform(-3, 3, d), rng.uniform(-6, 6, d)
        yield f"ray_spectrum d={d}", "bernoulli_ray_spectrum", (star, delta, s257)
        yield f"ray_quadform d={d}", "bernoulli_ray_quadform", (star, delta, s2049)
    d0 = rng.uniform(-5, 5, 20)
    yield "ngd_path 10^4 dimin.", "ngd_path", (d0, 0.5 / np.arange(1, 10_001), 0.0)
    m = np.diag(np.linspace(0.02, 1.0, 20))
    yield "gd_quadratic 10^3", "gd_quadratic_path", (m, d0, 2 / 1.02, 1000, 0.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    fast, slow = implementation("numba"), implementation("numpy")
    print(f"{'kernel':<24}{'numba [us]':>12}{'numpy [us]':>12}{'speedup':>10}")
    for label, name, inputs in cases():
        a = best_of(lambda: getattr(fast, name)(*inputs), args.repeat)
        b = best_of(lambda: getattr(slow, name)(*inputs), args.repeat)
        print(f"{label:<24}{a * 1e6:>12.1f}{b * 1e6:>12.1f}{b / a:>10.2f}")


if __name__ == "__main__":
    main()
