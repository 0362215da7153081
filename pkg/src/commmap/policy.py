"""Inducing-point selection inside a locality region and package assembly."""
from dataclasses import dataclass, field
import enum

import numpy as np

from . import _loops
from .kernel import DEFAULT_JITTER, as_points, gram, jittered_cross_gram, region_filter
from .polyagamma import as_w
from .sgpc import VariationalPosterior, sparse_variational_posterior, trace_tilde

TIE_RTOL = 1e-12


class PolicyKind(str, enum.Enum):
    GOOD = "good"
    RANDOM = "random"
    BAD = "bad"


class SelectionError(ValueError):
    pass


def psd_tolerance(cov, jitter=DEFAULT_JITTER):
    # absorbs float32 rounding of the wire format
    scale = float(np.max(np.abs(np.diag(cov)))) if cov.size else 0.0
    return jitter + 2.0 * cov.shape[0] * np.finfo(np.float32).eps * max(scale, 1.0)


def is_psd(cov, jitter=DEFAULT_JITTER):
    if not np.all(np.isfinite(cov)):
        return False
    return bool(np.linalg.eigvalsh(cov).min() >= -psd_tolerance(cov, jitter))


@dataclass(frozen=True, eq=False)
class InducingPackage:
    """What one agent broadcasts for one locality region."""

    agent_id: int
    locations: np.ndarray
    mean: np.ndarray
    covariance: np.ndarray
    region_id: int = 0
    # bookkeeping for the sender only; not transmitted
    indices: tuple = field(default=None, repr=False)
    trace: float = field(default=None, repr=False)

    def __post_init__(self):
        Z = as_points(self.locations)
        mu = np.asarray(self.mean, dtype=float).ravel()
        S = np.asarray(self.covariance, dtype=float)
        m = mu.size
        if m < 1 or Z.shape != (m, 4) or S.shape != (m, m):
            raise ValueError(f"inconsistent package shapes: locations {Z.shape}, mean {mu.shape}, cov {S.shape}")
        if not np.allclose(S, S.T, rtol=0, atol=1e-10 * max(1.0, float(np.abs(S).max()))):
            raise ValueError("package covariance is not symmetric")
        if not is_psd(S):
            raise ValueError("package covariance is not positive semi-definite")
        object.__setattr__(self, "locations", Z)
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "covariance", 0.5 * (S + S.T))
        object.__setattr__(self, "agent_id", int(self.agent_id))
        object.__setattr__(self, "region_id", int(self.region_id))

    @property
    def m(self):
        return self.mean.size

    @property
    def key(self):
        return (self.agent_id, self.region_id)

    def posterior(self):
        return VariationalPosterior(self.locations, self.mean, self.covariance)

    def __eq__(self, other):
        if not isinstance(other, InducingPackage):
            return NotImplemented
        return (self.key == other.key
                and np.array_equal(self.locations, other.locations)
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.covariance, other.covariance))


def subset_traces(candidates, m, params, jitter=DEFAULT_JITTER):
    """Residual trace for every m-subset of the candidates (m = 1 or 2).

    Returns ``(subsets, traces)`` with subsets in lexicographic order.
    """
    C = as_points(candidates)
    n = C.shape[0]
    Kc = np.ascontiguousarray(jittered_cross_gram(C, C, params, jitter))
    diag = 1.0 + jitter
    total = n * diag
    if m == 1:
        subsets = np.arange(n)[:, None]
        return subsets, total - _loops.single_projections(Kc, diag)
    if m == 2:
        proj = _loops.pair_projections(Kc, np.ascontiguousarray(gram(C, params)), diag)
        a, b = np.triu_indices(n, k=1)
        return np.stack([a, b], axis=1), total - proj[a, b]
    raise ValueError("exhaustive table only for m in {1, 2}")


def _pick(scores, maximize):
    s = -scores if maximize else scores
    best = s.min()
    tol = TIE_RTOL * max(1.0, abs(best))
    # first index within tolerance is the lexicographically smallest subset
    return int(np.flatnonzero(s <= best + tol)[0])


def _greedy(C, m, maximize, params, jitter):
    chosen = []
    for _ in range(m):
        rest = [j for j in range(C.shape[0]) if j not in chosen]
        scores = np.array([trace_tilde(C, C[chosen + [j]], params, jitter) for j in rest])
        chosen.append(rest[_pick(scores, maximize)])
    return tuple(sorted(chosen))


def table_lookup(table, sel):
    """Residual trace of subset ``sel`` from a :func:`subset_traces` table."""
    subsets, scores = table
    n_sub = len(sel)
    if n_sub == 1:
        return float(scores[sel[0]])
    # rank of (a, b) in the row-major upper triangle of an n x n matrix
    n = int(round((1 + np.sqrt(1 + 8 * len(scores))) / 2))
    a, b = sel
    return float(scores[a * n - a * (a + 1) // 2 + (b - a - 1)])


def select_inducing(candidates, m, policy, params, rng=None, jitter=DEFAULT_JITTER, table=None):
    """Indices (ascending) of the m candidates chosen by ``policy``.

    good/bad search all subsets for m <= 2 and fall back to greedy forward
    selection for larger m.  ``table`` lets callers share one
    :func:`subset_traces` result across policies.
    """
    policy = PolicyKind(policy)
    C = as_points(candidates) if np.asarray(candidates).size else np.zeros((0, 4))
    n = C.shape[0]
    if n == 0:
        raise SelectionError("no candidate points")
    if not 1 <= m <= n:
        raise SelectionError(f"cannot select m={m} of {n} candidates")
    if policy is PolicyKind.RANDOM:
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        return tuple(sorted(int(i) for i in gen.choice(n, size=m, replace=False)))
    if m == n:
        return tuple(range(n))
    maximize = policy is PolicyKind.BAD
    if m <= 2:
        subsets, scores = table if table is not None else subset_traces(C, m, params, jitter)
        return tuple(int(i) for i in subsets[_pick(scores, maximize)])
    return _greedy(C, m, maximize, params, jitter)


def build_package(agent_id, X_local, y_local, w_local, region, m, policy, params, rng=None,
                  region_id=0, jitter=DEFAULT_JITTER, table=None):
    """Select inducing points among the agent's in-region data and summarize
    the in-region data with the optimal q(f_Z | w).

    The package records the residual trace of its selection; for m <= 2 it is
    read from the same subset table the search used, so traces of different
    policies are directly comparable.  A precomputed ``table`` must have been
    built from the in-region points.
    """
    X_local = as_points(X_local)
    y_local = np.asarray(y_local).ravel()
    w_local = as_w(w_local)
    if not (X_local.shape[0] == y_local.size == w_local.size):
        raise ValueError("X_local, y_local and w_local must have equal length")
    inside = region_filter(X_local, region)
    if inside.size < m:
        raise SelectionError(f"region holds {inside.size} points, need at least m={m}")
    Xr, yr, wr = X_local[inside], y_local[inside], w_local[inside]
    if m <= 2 and table is None:
        table = subset_traces(Xr, m, params, jitter)
    sel = select_inducing(Xr, m, policy, params, rng, jitter, table)
    Z = Xr[list(sel)]
    q = sparse_variational_posterior(Xr, yr, wr, Z, params, jitter)
    trace = table_lookup(table, sel) if m <= 2 else trace_tilde(Xr, Z, params, jitter)
    return InducingPackage(
        agent_id, Z, q.mean, q.covariance, region_id,
        indices=tuple(int(inside[i]) for i in sel),
        trace=trace,
    )
