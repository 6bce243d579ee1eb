"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--n 2048] [--repeat 3]

Both implementations are called directly, so a single process covers both
paths. Numba timings exclude the first (compiling) call.
"""

import argparse
import time

import numpy as np

from wienerlab import kernels
from wienerlab._accel import HAS_NUMBA


def best_of(fn, repeat):
    fn()  # warm-up / compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n):
    rng = np.random.default_rng(0)
    f = np.cumsum(rng.standard_normal(n + 1)) / np.sqrt(n)
    beta = 0.68
    left, right = kernels.hat_weights(beta, n)
    cx, cw = np.polynomial.legendre.leggauss(8)
    xs, ws = np.polynomial.legendre.leggauss(16)
    m = max(64, n // 8)
    return {
        "left_sums": (
            lambda: kernels._left_sums_nb(f, left, right, True),
            lambda: kernels._left_sums_np(f, left, right, True),
        ),
        "lambda_max": (
            lambda: kernels._lambda_max_nb(f, left, right, beta, 1.0, beta),
            lambda: kernels._lambda_max_np(f, left, right, beta, 1.0, beta),
        ),
        f"volterra_matrix(n={m})": (
            lambda: kernels._volterra_matrix_nb(m, 0.2, 0, 2, cx, cw, xs, ws),
            lambda: kernels._volterra_matrix_np(m, 0.2, 0, 2, cx, cw, xs, ws),
        ),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba disabled; numba columns time the interpreted loops")
    print(f"{'kernel':28s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, (nb, npf) in cases(args.n).items():
        t_nb, a = best_of(nb, args.repeat)
        t_np, b = best_of(npf, args.repeat)
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        print(f"{name:28s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
