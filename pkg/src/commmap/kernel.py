"""Squared-exponential kernel, Gram assembly and locality-region geometry."""
from dataclasses import dataclass
import math

import numpy as np
from scipy.linalg import cholesky, LinAlgError

from . import _loops

DEFAULT_JITTER = 1e-8


class ConditioningError(np.linalg.LinAlgError):
    """A matrix could not be Cholesky-factorized even after jitter."""


@dataclass(frozen=True)
class KernelParams:
    lengthscale: float
    signal_variance: float = 1.0

    def __post_init__(self):
        if not (self.lengthscale > 0 and math.isfinite(self.lengthscale)):
            raise ValueError(f"lengthscale must be positive and finite, got {self.lengthscale!r}")
        if self.signal_variance != 1.0:
            raise ValueError("signal_variance is fixed to 1")


@dataclass(frozen=True)
class LocalityRegion:
    """Euclidean ball in standardized (tx, rx) space."""

    center: tuple
    radius: float

    def __post_init__(self):
        center = tuple(float(v) for v in np.asarray(self.center, dtype=float).ravel())
        object.__setattr__(self, "center", center)
        if not self.radius >= 0:
            raise ValueError(f"radius must be nonnegative, got {self.radius!r}")

    def contains(self, point):
        p = np.asarray(point, dtype=float)
        return bool(np.linalg.norm(p - np.asarray(self.center)) <= self.radius)


def as_points(X):
    """Coerce to a C-contiguous float64 (N, d) array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    return np.ascontiguousarray(X)


def sqdist(X, Z):
    return _loops.sqdist(as_points(X), as_points(Z))


def kernel_eval(x, x2, params):
    d2 = float(np.sum((np.asarray(x, dtype=float) - np.asarray(x2, dtype=float)) ** 2))
    return math.exp(-d2 / (2.0 * params.lengthscale**2))


def _from_sqdist(D2, params):
    return np.exp(-D2 / (2.0 * params.lengthscale**2))


def gram(X, params):
    X = as_points(X)
    K = _from_sqdist(sqdist(X, X), params)
    # enforce exact symmetry and unit diagonal
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, 1.0)
    return K


def cross_gram(X, Z, params):
    return _from_sqdist(sqdist(X, Z), params)


def jittered_cross_gram(X, Z, params, jitter=DEFAULT_JITTER):
    """Cross-Gram with the jitter nugget added wherever a row of X coincides
    exactly with a row of Z.

    Together with ``gram(Z) + jitter * I`` this treats the jitter as part of the
    kernel, so that ``Z == X`` reproduces the full model to round-off rather
    than to O(jitter).
    """
    D2 = sqdist(X, Z)
    K = _from_sqdist(D2, params)
    if jitter:
        K[D2 == 0.0] += jitter
    return K


def jittered_gram(X, params, jitter=DEFAULT_JITTER):
    K = gram(X, params)
    K[np.diag_indices_from(K)] += jitter
    return K


def cholesky_lower(A, jitter=DEFAULT_JITTER, what="matrix"):
    """Lower Cholesky factor of ``A + jitter * I``; raises ConditioningError."""
    A = 0.5 * (A + A.T)
    if jitter:
        A = A + jitter * np.eye(A.shape[0])
    try:
        return cholesky(A, lower=True, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise ConditioningError(f"Cholesky of {what} failed after jitter {jitter:g}: {exc}") from exc


def locality_radius(lengthscale, epsilon):
    """Distance at which the kernel decays to ``epsilon``."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not lengthscale > 0:
        raise ValueError("lengthscale must be positive")
    return lengthscale * math.sqrt(-2.0 * math.log(epsilon))


def region_filter(points, region):
    """Indices of points inside ``region`` (closed ball), in original order."""
    if np.asarray(points).size == 0:
        return np.zeros(0, dtype=np.intp)
    X = as_points(points)
    d = np.sqrt(sqdist(X, np.asarray(region.center, dtype=float)[None, :])[:, 0])
    return np.flatnonzero(d <= region.radius)
