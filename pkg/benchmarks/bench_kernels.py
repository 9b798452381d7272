"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel and size: best wall time for each backend and
the speed-up. The first numba call (JIT compile or cache load) is excluded.
"""

import argparse
import time

import numpy as np

from esnlens import kernels, set_backend


def best_time(func, repeat):
    func()
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - t)
    return best


def cases(rng):
    # density 0.1 matches init_random; density 1.0 exercises the dense path
    for n, T, density in [(10, 10000, 1.0), (100, 10000, 0.1), (100, 10000, 1.0), (500, 2000, 0.1), (500, 2000, 1.0)]:
        mask = rng.random((n, n)) < density
        W = np.where(mask, rng.uniform(-1, 1, (n, n)), 0.0) * (0.9 / np.sqrt(density * n))
        drive = rng.standard_normal((T, n))
        x0 = np.zeros(n)
        name = f"leaky_recurrence N={n} T={T} d={density}"
        yield name, lambda W=W, d=drive, x0=x0: kernels.leaky_recurrence(W, d, 0.9, x0)
    for T in [10000, 100000]:
        u = rng.uniform(-1, 1, T)
        yield f"narma10 T={T}", lambda u=u: kernels.narma10(u)
    for T, d in [(500, 1), (1000, 100), (2000, 500)]:
        A = rng.standard_normal((T, d))
        yield f"pairwise_distances T={T} dim={d}", lambda A=A: kernels.pairwise_distances(A, A)


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<40} {'numpy s':>10} {'numba s':>10} {'speed-up':>9}")
    for name, func in cases(rng):
        set_backend("numpy")
        t_np = best_time(func, args.repeat)
        set_backend("numba")
        t_nb = best_time(func, args.repeat)
        print(f"{name:<40} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
