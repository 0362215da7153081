"""Polya-Gamma PG(1, c) draws and the two-block Gibbs sweep for w."""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import _loops
from .kernel import DEFAULT_JITTER, as_points, cholesky_lower, jittered_gram

N_TERMS = 200
W_FLOOR = 1e-6

SAMPLED = "sampled"
DETERMINISTIC = "deterministic-mean"


@dataclass(frozen=True, eq=False)
class PGState:
    w: np.ndarray
    source: str = SAMPLED
    seed: object = None
    iterations: int = 0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if w.size and not np.all(w > 0):
            raise ValueError("PG draws must be strictly positive")
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.size

    def __eq__(self, other):
        if not isinstance(other, PGState):
            return NotImplemented
        return (self.source == other.source and self.iterations == other.iterations
                and np.array_equal(self.w, other.w))

    def subset(self, idx):
        return PGState(self.w[np.asarray(idx, dtype=np.intp)], self.source, self.seed, self.iterations)


def as_w(w):
    """Accept a PGState or a plain array of PG values."""
    return np.asarray(w.w if isinstance(w, PGState) else w, dtype=float).ravel()


def kappa(y):
    y = np.asarray(y, dtype=float).ravel()
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return y - 0.5


def pg_mean(c):
    """E[PG(1, c)] = tanh(c/2) / (2c), continuous at c = 0 where it is 1/4."""
    c = np.abs(np.asarray(c, dtype=float))
    small = c < 1e-4
    safe = np.where(small, 1.0, c)
    out = np.where(small, 0.25 - c * c / 48.0, np.tanh(safe / 2.0) / (2.0 * safe))
    return out if out.ndim else float(out)


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def pg_draw(c, rng, n_terms=N_TERMS):
    """Vector of independent PG(1, c_i) draws.

    Truncated Gamma-series with ``n_terms`` Exp(1) terms; the expectation of the
    discarded tail is added back as a constant, so the mean is exact.
    """
    c = np.ascontiguousarray(np.atleast_1d(np.asarray(c, dtype=float)))
    exps = _rng(rng).standard_exponential((c.size, n_terms))
    means = np.ascontiguousarray(np.atleast_1d(pg_mean(c)))
    return _loops.pg_series(c, exps, means)


def pg_sample(c, rng, n_terms=N_TERMS):
    return float(pg_draw(np.array([c]), rng, n_terms)[0])


def _conditional_f(K, w, kap):
    """Mean and covariance of f | y, w with prior N(0, K).

    Uses ``Sigma = K - K (K + Omega^-1)^-1 K`` so K itself is never inverted.
    """
    A = K + np.diag(1.0 / w)
    L = cholesky_lower(A, 0.0, "K + Omega^-1")
    V = solve_triangular(L, K, lower=True)
    cov = K - V.T @ V
    cov = 0.5 * (cov + cov.T)
    return cov @ kap, cov


def gibbs_sample_w(X, y, params, iterations=100, mode=SAMPLED, rng=None,
                   jitter=DEFAULT_JITTER, floor=W_FLOOR, n_terms=N_TERMS):
    """Alternate w | f and f | y, w starting from f = 0 and return the final w.

    In ``deterministic-mean`` mode each draw is replaced by its conditional mean,
    which turns the sweep into a fixed-point iteration.
    """
    X = as_points(X)
    kap = kappa(y)
    if X.shape[0] != kap.size or kap.size == 0:
        raise ValueError("X and y must be non-empty and the same length")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if mode not in (SAMPLED, DETERMINISTIC):
        raise ValueError(f"unknown mode {mode!r}")
    seed = rng if not isinstance(rng, np.random.Generator) else None
    gen = _rng(rng) if mode == SAMPLED else None

    K = jittered_gram(X, params, jitter)
    f = np.zeros(kap.size)
    for it in range(iterations):
        if mode == SAMPLED:
            w = pg_draw(f, gen, n_terms)
        else:
            w = np.atleast_1d(pg_mean(f))
        w = np.maximum(w, floor)
        if it == iterations - 1:
            break
        mean, cov = _conditional_f(K, w, kap)
        if mode == SAMPLED:
            Lc = cholesky_lower(cov, jitter, "conditional covariance of f")
            f = mean + Lc @ gen.standard_normal(kap.size)
        else:
            f = mean
    return PGState(w, mode, seed, iterations)

