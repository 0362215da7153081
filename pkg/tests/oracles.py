"""Independent reference implementations used by the tests.

These deliberately take the slow, literal route (explicit inverses, dense
grids, adaptive quadrature) and share no code with the package beyond the
kernel formula itself.
"""
import itertools
import math

import numpy as np
from scipy import integrate
from scipy.special import expit

JITTER = 1e-8


def se_kernel(A, B, lengthscale):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
    return np.exp(-d2 / (2.0 * lengthscale**2))


def nugget_kernel(A, B, lengthscale, jitter=JITTER):
    """Kernel plus the jitter nugget on exactly coincident pairs."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    same = np.all(A[:, None, :] == B[None, :, :], axis=-1)
    return se_kernel(A, B, lengthscale) + jitter * same


def full_posterior_brute(X, y, w, lengthscale, jitter=JITTER):
    """Literal (K^-1 + Omega)^-1 and Sigma kappa."""
    K = nugget_kernel(X, X, lengthscale, jitter)
    S = np.linalg.inv(np.linalg.inv(K) + np.diag(w))
    return S @ (np.asarray(y, float) - 0.5), S


def sparse_posterior_brute(X, y, w, Z, lengthscale, jitter=JITTER):
    """Literal K_ZZ St^-1 K_ZX kappa and K_ZZ St^-1 K_ZZ."""
    Kzz = nugget_kernel(Z, Z, lengthscale, jitter)
    Kzx = nugget_kernel(Z, X, lengthscale, jitter)
    St = Kzz + Kzx @ np.diag(w) @ Kzx.T
    Si = np.linalg.inv(St)
    return Kzz @ Si @ Kzx @ (np.asarray(y, float) - 0.5), Kzz @ Si @ Kzz


def trace_brute(X, Z, lengthscale, jitter=JITTER):
    X = np.atleast_2d(X)
    if len(Z) == 0:
        return float(X.shape[0])
    Kxx = nugget_kernel(X, X, lengthscale, jitter)
    Kxz = nugget_kernel(X, Z, lengthscale, jitter)
    Kzz = nugget_kernel(Z, Z, lengthscale, jitter)
    return float(np.trace(Kxx - Kxz @ np.linalg.solve(Kzz, Kxz.T)))


def all_subset_traces(X, m, lengthscale, jitter=JITTER):
    """{index tuple: trace} over every m-subset, by explicit matrices."""
    X = np.atleast_2d(X)
    return {s: trace_brute(X, X[list(s)], lengthscale, jitter)
            for s in itertools.combinations(range(X.shape[0]), m)}


def logistic_gauss_trapezoid(mean, var, n=400001, width=14.0):
    """E[logistic(f)], f ~ N(mean, var), on a dense uniform grid."""
    sd = math.sqrt(var)
    f = np.linspace(mean - width * sd, mean + width * sd, n)
    dens = np.exp(-0.5 * ((f - mean) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
    return float(integrate.trapezoid(expit(f) * dens, f))


def logistic_gauss_adaptive(mean, var):
    sd = math.sqrt(var)

    def g(f):
        return expit(f) * math.exp(-0.5 * ((f - mean) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))

    val, _ = integrate.quad(g, mean - 20 * sd, mean + 20 * sd, epsabs=1e-14, epsrel=1e-13, limit=500)
    return val


def predictive_moments_quadrature(x_star, Z, mu, S, lengthscale, jitter=JITTER, order=40):
    """Mean and variance of f* from int p(f*|f_Z) q(f_Z) df_Z by a tensor
    Gauss-Hermite rule over f_Z (exact for the polynomial integrands here)."""
    Z = np.atleast_2d(Z)
    Kzz = nugget_kernel(Z, Z, lengthscale, jitter)
    kz = nugget_kernel(Z, x_star, lengthscale, jitter)[:, 0]
    a = np.linalg.solve(Kzz, kz)
    cond_var = 1.0 + jitter - kz @ a
    t, wt = np.polynomial.hermite.hermgauss(order)
    wt = wt / math.sqrt(math.pi)
    L = np.linalg.cholesky(S)
    m1 = m2 = 0.0
    for idx in itertools.product(range(order), repeat=Z.shape[0]):
        u = math.sqrt(2.0) * t[list(idx)]
        weight = float(np.prod(wt[list(idx)]))
        fz = mu + L @ u
        cm = a @ fz
        m1 += weight * cm
        m2 += weight * (cm * cm + cond_var)
    return m1, m2 - m1 * m1


def log_marginal_1d(y, w, k=1.0 + JITTER):
    """log int prod p(y|w,f) N(f|0,k) df for one point with
    p(y|w,f) = 1/2 exp(kappa f - w f^2 / 2)."""
    kap = y - 0.5

    def g(f):
        return 0.5 * math.exp(kap * f - 0.5 * w * f * f) * math.exp(-0.5 * f * f / k) / math.sqrt(2 * math.pi * k)

    val, _ = integrate.quad(g, -40, 40, epsabs=1e-15, epsrel=1e-13, limit=200)
    return math.log(val)


def pg_fixed_point_1d(y=1, k=1.0 + JITTER):
    """N = 1 deterministic fixed point w = E[PG(1, f)], f = k kappa / (1 + k w),
    solved by bisection on w."""
    kap = y - 0.5

    def mean_pg(c):
        c = abs(c)
        return 0.25 if c == 0 else math.tanh(c / 2) / (2 * c)

    def g(w):
        return mean_pg(k * kap / (1 + k * w)) - w

    lo, hi = 1e-6, 0.25 + 1e-9
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(lo) * g(mid) <= 0:
            hi = mid
        else:
            lo = mid
    w = 0.5 * (lo + hi)
    return w, k * kap / (1 + k * w)
