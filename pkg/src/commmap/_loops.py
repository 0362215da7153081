"""Hot inner loops, each with a numba kernel and a numpy twin.

The public names at the bottom dispatch on :data:`commmap._accel.USE_NUMBA`.
Both twins take the same arguments and return the same arrays; the test suite
checks them against each other and ``benchmarks/bench_backends.py`` times them.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

_INV_2PI2 = 1.0 / (2.0 * np.pi**2)
_INV_4PI2 = 1.0 / (4.0 * np.pi**2)


# -- pairwise squared distances ---------------------------------------------

def sqdist_numpy(X, Z):
    # explicit differences so coincident rows give exactly 0.0
    diff = X[:, None, :] - Z[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


@njit(cache=True)
def sqdist_numba(X, Z):
    n, d = X.shape
    m = Z.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                t = X[i, k] - Z[j, k]
                acc += t * t
            out[i, j] = acc
    return out


# -- truncated Gamma-series Polya-Gamma draws -------------------------------

def pg_series_numpy(c, exps, means):
    """``means + sum_k (g_k - 1) / (2 pi^2 ((k - 1/2)^2 + c^2 / (4 pi^2))))``."""
    k = np.arange(1, exps.shape[1] + 1) - 0.5
    denom = k[None, :] ** 2 + (c[:, None] ** 2) * _INV_4PI2
    return means + _INV_2PI2 * np.sum((exps - 1.0) / denom, axis=1)


@njit(cache=True)
def pg_series_numba(c, exps, means):
    n, K = exps.shape
    out = np.empty(n)
    for i in range(n):
        c2 = c[i] * c[i] * _INV_4PI2
        acc = 0.0
        for k in range(K):
            h = k + 0.5
            acc += (exps[i, k] - 1.0) / (h * h + c2)
        out[i] = means[i] + _INV_2PI2 * acc
    return out


# -- Nystrom projection traces for one- and two-point subsets ----------------
#
# Kc is the (N, C) cross-covariance between the N data points and the C
# candidate inducing points, diag is the jittered inducing variance 1 + eps and
# Kcc the plain (C, C) candidate Gram matrix.  The projection of a subset S is
# tr(K_NS K_SS^-1 K_SN).

def single_projections_numpy(Kc, diag):
    return np.einsum("nj,nj->j", Kc, Kc) / diag


@njit(cache=True)
def single_projections_numba(Kc, diag):
    n, c = Kc.shape
    out = np.zeros(c)
    # row-major sweep keeps the C-ordered matrix in cache
    for i in range(n):
        for j in range(c):
            out[j] += Kc[i, j] * Kc[i, j]
    return out / diag


def pair_projections_numpy(Kc, Kcc, diag):
    S = Kc.T @ Kc
    s = np.diag(S)
    num = diag * (s[:, None] + s[None, :]) - 2.0 * Kcc * S
    out = num / (diag * diag - Kcc * Kcc)
    np.fill_diagonal(out, np.nan)
    return out


@njit(cache=True)
def pair_projections_numba(Kc, Kcc, diag):
    c = Kc.shape[1]
    S = np.ascontiguousarray(Kc.T) @ Kc
    out = np.empty((c, c))
    for a in range(c):
        out[a, a] = np.nan
        for b in range(a + 1, c):
            k = Kcc[a, b]
            v = (diag * (S[a, a] + S[b, b]) - 2.0 * k * S[a, b]) / (diag * diag - k * k)
            out[a, b] = v
            out[b, a] = v
    return out


if USE_NUMBA:
    sqdist = sqdist_numba
    pg_series = pg_series_numba
    single_projections = single_projections_numba
    pair_projections = pair_projections_numba
else:
    sqdist = sqdist_numpy
    pg_series = pg_series_numpy
    single_projections = single_projections_numpy
    pair_projections = pair_projections_numpy
