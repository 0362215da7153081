"""Gaussian computations conditioned on the PG vector w.

Every function here treats the factorization jitter as a nugget that is part of
the kernel: ``K_ZZ = gram(Z) + jitter*I`` and cross terms pick up ``jitter``
where two points coincide.  With that convention ``Z == X`` reproduces the full
model to round-off.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import expit, wofz

from .kernel import (
    DEFAULT_JITTER,
    as_points,
    cholesky_lower,
    jittered_cross_gram,
    jittered_gram,
)
from .polyagamma import as_w, kappa

DEFAULT_QUADRATURE_ORDER = 61
TRACE_CLAMP = 1e-10
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class LatentPosterior:
    mean: np.ndarray
    covariance: np.ndarray


@dataclass(frozen=True, eq=False)
class VariationalPosterior:
    inducing_locations: np.ndarray
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        Z = as_points(self.inducing_locations)
        mu = np.asarray(self.mean, dtype=float).ravel()
        S = np.asarray(self.covariance, dtype=float)
        if Z.shape[0] < 1 or mu.size != Z.shape[0] or S.shape != (mu.size, mu.size):
            raise ValueError("inconsistent variational posterior shapes")
        object.__setattr__(self, "inducing_locations", Z)
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "covariance", S)

    @property
    def m(self):
        return self.mean.size


@dataclass(frozen=True)
class BoundReport:
    l_lower: float
    l_upper: float
    kl_upper_eigen: float
    trace_tilde: float
    log_marginal: float = None

    @property
    def gap(self):
        return self.l_upper - self.l_lower


def _check_sizes(X, y, w):
    X = as_points(X)
    kap = kappa(y)
    w = as_w(w)
    if not (X.shape[0] == kap.size == w.size):
        raise ValueError(f"size mismatch: X has {X.shape[0]} rows, y {kap.size}, w {w.size}")
    if not np.all(w > 0):
        raise ValueError("all PG values must be positive")
    return X, kap, w


def full_conditional_posterior(X, y, w, params, jitter=DEFAULT_JITTER):
    """N(Sigma kappa, Sigma) with Sigma = (K^-1 + Omega)^-1."""
    X, kap, w = _check_sizes(X, y, w)
    K = jittered_gram(X, params, jitter)
    L = cholesky_lower(K + np.diag(1.0 / w), 0.0, "K + Omega^-1")
    V = solve_triangular(L, K, lower=True)
    cov = K - V.T @ V
    cov = 0.5 * (cov + cov.T)
    return LatentPosterior(cov @ kap, cov)


def _whitened_cross(X, Z, params, jitter):
    """Cholesky of K_ZZ and L^-1 K_ZX."""
    Z = as_points(Z)
    L = cholesky_lower(jittered_gram(Z, params, jitter), 0.0, "K_ZZ")
    A = solve_triangular(L, jittered_cross_gram(Z, X, params, jitter), lower=True)
    return L, A


def sparse_variational_posterior(X, y, w, Z, params, jitter=DEFAULT_JITTER):
    """Optimal Gaussian q(f_Z | w).

    mean = K_ZZ St^-1 K_ZX kappa and cov = K_ZZ St^-1 K_ZZ with
    St = K_ZZ + K_ZX Omega K_XZ.  St is factorized in whitened form
    ``L^-1 St L^-T = I + A Omega A^T`` which is bounded below by I.
    """
    X, kap, w = _check_sizes(X, y, w)
    Z = as_points(Z)
    if Z.shape[0] < 1:
        raise ValueError("need at least one inducing point")
    L, A = _whitened_cross(X, Z, params, jitter)
    B = np.eye(Z.shape[0]) + (A * w) @ A.T
    LB = cholesky_lower(B, 0.0, "whitened Sigma-tilde")
    C = solve_triangular(LB, L.T, lower=True)
    cov = C.T @ C
    cov = 0.5 * (cov + cov.T)
    mean = L @ cho_solve((LB, True), A @ kap)
    return VariationalPosterior(Z.copy(), mean, cov)


def predict_latent(x_star, vp, params, jitter=DEFAULT_JITTER):
    """Latent mean and variance at test points under q(f_Z), marginalized.

    variance = k** - k*Z K_ZZ^-1 kZ* + k*Z K_ZZ^-1 S K_ZZ^-1 kZ*.
    Returns floats for a single 1-D point, arrays otherwise.
    """
    single = np.asarray(x_star).ndim == 1
    Xs = as_points(x_star)
    Z = vp.inducing_locations
    L = cholesky_lower(jittered_gram(Z, params, jitter), 0.0, "K_ZZ")
    A = solve_triangular(L, jittered_cross_gram(Z, Xs, params, jitter), lower=True)
    Bm = solve_triangular(L.T, A, lower=False)  # K_ZZ^-1 k_Z*
    mean = Bm.T @ vp.mean
    var = (1.0 + jitter) - np.einsum("ij,ij->j", A, A) + np.einsum("ij,ik,kj->j", Bm, vp.covariance, Bm)
    var = np.maximum(var, 1e-12)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


# -- probability of success by 1-D Gauss-Hermite quadrature ------------------
#
# logistic(f) = 1/2 + sum_k 2f / (f^2 + a_k^2), a_k = (2k-1) pi.  The first few
# pole pairs sit close to the real axis and make plain Gauss-Hermite converge
# slowly for wide Gaussians, so they are integrated in closed form with the
# Faddeeva function and the quadrature only sees the smooth remainder.

_N_POLES = 4
_POLES = (2.0 * np.arange(1, _N_POLES + 1) - 1.0) * np.pi


@lru_cache(maxsize=16)
def _hermgauss(order):
    t, w = np.polynomial.hermite.hermgauss(order)
    return t, w / math.sqrt(math.pi)


def _pole_part(f):
    f = f[..., None]
    return np.sum(2.0 * f / (f * f + _POLES**2), axis=-1)


def _pole_expectation(mean, scale):
    # E[2f/(f^2+a^2)] = 2 Re E[1/(f - ia)] = 2 Re(i sqrt(pi) w(z) / scale)
    z = (1j * _POLES - mean[..., None]) / scale[..., None]
    vals = 1j * math.sqrt(math.pi) * wofz(z) / scale[..., None]
    return 2.0 * np.sum(vals.real, axis=-1)


def predict_probability(latent_mean, latent_variance, quadrature_order=DEFAULT_QUADRATURE_ORDER):
    """E[logistic(f)] for f ~ N(mean, variance); vectorized over inputs."""
    if quadrature_order < 5:
        raise ValueError(f"quadrature order must be >= 5, got {quadrature_order}")
    mean = np.asarray(latent_mean, dtype=float)
    var = np.asarray(latent_variance, dtype=float)
    if np.any(~(var > 0)):
        raise ValueError("latent variance must be positive")
    mean, var = np.broadcast_arrays(mean, var)
    t, wts = _hermgauss(int(quadrature_order))
    scale = np.sqrt(2.0 * var)
    f = mean[..., None] + scale[..., None] * t
    smooth = (expit(f) - _pole_part(f)) @ wts
    p = smooth + _pole_expectation(mean, scale)
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


# -- Nystrom residual and marginal-likelihood bounds --------------------------

def trace_tilde(X, Z, params, jitter=DEFAULT_JITTER):
    """tr(K_XX - K_XZ K_ZZ^-1 K_ZX); equals N for empty Z."""
    X = as_points(X)
    n = X.shape[0]
    if Z is None or np.asarray(Z).size == 0:
        return float(n)
    _, A = _whitened_cross(X, Z, params, jitter)
    t = n * (1.0 + jitter) - float(np.sum(A * A))
    return max(t, 0.0) if t > -TRACE_CLAMP else t


def log_constant(y, w):
    """log C of the PG-augmented likelihood, prod_n p(y_n | w_n, f_n) = C N(Omega^-1 kappa | f, Omega^-1)."""
    kap = kappa(y)
    w = as_w(w)
    return float(np.sum(-math.log(2.0) + 0.5 * np.log(2.0 * math.pi / w) + kap**2 / (2.0 * w)))


def _gauss_logpdf(c, S):
    L = cholesky_lower(S, 0.0, "marginal covariance")
    a = solve_triangular(L, c, lower=True)
    return -0.5 * c.size * LOG_2PI - float(np.sum(np.log(np.diag(L)))) - 0.5 * float(a @ a)


def log_marginal_conditioned(X, y, w, params, jitter=DEFAULT_JITTER):
    """log p(y | w) = log C + log N(Omega^-1 kappa | 0, Omega^-1 + K)."""
    X, kap, w = _check_sizes(X, y, w)
    S = jittered_gram(X, params, jitter) + np.diag(1.0 / w)
    return log_constant(y, w) + _gauss_logpdf(kap / w, S)


def bounds_report(X, y, w, Z, params, jitter=DEFAULT_JITTER, exact=None):
    """Lower and upper bounds on log p(y | w) for inducing set Z, plus the
    eigenvalue KL bound.  ``exact`` (default: N <= 500) adds the exact value.
    """
    X, kap, w = _check_sizes(X, y, w)
    n = kap.size
    _, A = _whitened_cross(X, Z, params, jitter)
    Q = A.T @ A
    Q = 0.5 * (Q + Q.T)
    kt_diag = (1.0 + jitter) - np.diag(Q)
    p = float(np.sum(kt_diag))
    if p > -TRACE_CLAMP:
        p = max(p, 0.0)
    c = kap / w
    logC = log_constant(y, w)
    S = Q + np.diag(1.0 / w)
    l_lower = logC + _gauss_logpdf(c, S) - 0.5 * float(np.sum(w * kt_diag))

    Ls = cholesky_lower(S, 0.0, "Omega^-1 + Q")
    logdet = 2.0 * float(np.sum(np.log(np.diag(Ls))))
    Lp = cholesky_lower(S + p * np.eye(n), 0.0, "Omega^-1 + pI + Q")
    a = solve_triangular(Lp, c, lower=True)
    l_upper = logC - 0.5 * n * LOG_2PI - 0.5 * logdet - 0.5 * float(a @ a)

    kl = 0.5 * p * float(w.max()) + float(kap @ kap) / (2.0 * float(w.min()))
    if exact is None:
        exact = n <= 500
    lm = log_marginal_conditioned(X, y, w, params, jitter) if exact else None
    return BoundReport(l_lower, l_upper, kl, p, lm)
