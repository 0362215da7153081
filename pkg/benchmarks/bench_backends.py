"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_backends.py [--repeat 20] [--n 400]

Both twins are imported directly, so the COMMMAP_NUMBA flag does not matter
here. Compilation happens in a warm-up call before timing.
"""
import argparse
import timeit

import numpy as np

from commmap import _loops
from commmap._accel import HAVE_NUMBA


def cases(n, rng):
    X = rng.normal(scale=0.3, size=(n, 4))
    d2 = ((X[:, None] - X[None]) ** 2).sum(-1)
    K = np.exp(-d2 / (2 * 0.289**2))
    Kc = K + 1e-8 * np.eye(n)
    diag = 1.0 + 1e-8
    c = rng.normal(scale=2.0, size=n)
    exps = rng.standard_exponential((n, 200))
    means = np.tanh(np.abs(c) / 2) / (2 * np.abs(c))
    return {
        "sqdist": (X, X),
        "pg_series": (c, exps, means),
        "single_projections": (Kc, diag),
        "pair_projections": (Kc, K, diag),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=400, help="points per kernel call")
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"n={args.n}, best of {args.repeat} calls")
    print(f"{'kernel':<20} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, inputs in cases(args.n, rng).items():
        f_np = getattr(_loops, f"{name}_numpy")
        f_nb = getattr(_loops, f"{name}_numba")
        ref, got = f_np(*inputs), f_nb(*inputs)
        np.testing.assert_allclose(got, ref, rtol=1e-10, equal_nan=True)
        t_np = min(timeit.repeat(lambda: f_np(*inputs), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: f_nb(*inputs), number=1, repeat=args.repeat))
        print(f"{name:<20} {1e3 * t_np:>10.3f} {1e3 * t_nb:>10.3f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
