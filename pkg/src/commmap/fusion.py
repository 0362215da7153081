"""Agent state, block-diagonal fusion of received packages, and prediction."""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .kernel import DEFAULT_JITTER
from .policy import InducingPackage
from .sgpc import DEFAULT_QUADRATURE_ORDER, VariationalPosterior, predict_latent, predict_probability
from .wire import decode_package


class FusionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FusedPosterior:
    locations: np.ndarray
    mean: np.ndarray
    covariance: np.ndarray
    keys: tuple
    block_sizes: tuple

    @property
    def m(self):
        return self.mean.size

    def posterior(self):
        return VariationalPosterior(self.locations, self.mean, self.covariance)

    def __eq__(self, other):
        if not isinstance(other, FusedPosterior):
            return NotImplemented
        return (self.keys == other.keys and self.block_sizes == other.block_sizes
                and np.array_equal(self.locations, other.locations)
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.covariance, other.covariance))


def fuse(packages):
    """Stack packages into one Gaussian over all inducing values.

    Blocks are ordered by (agent_id, region_id); cross-package covariance is
    zero because locality regions are treated as independent.
    """
    packages = list(packages)
    if not packages:
        raise FusionError("nothing to fuse")
    ordered = sorted(packages, key=lambda p: p.key)
    keys = tuple(p.key for p in ordered)
    if len(set(keys)) != len(keys):
        dup = sorted({k for k in keys if keys.count(k) > 1})
        raise FusionError(f"duplicate (agent, region) keys: {dup}")
    return FusedPosterior(
        locations=np.vstack([p.locations for p in ordered]),
        mean=np.concatenate([p.mean for p in ordered]),
        covariance=block_diag(*[p.covariance for p in ordered]),
        keys=keys,
        block_sizes=tuple(p.m for p in ordered),
    )


def decentralized_latent(x_star, fused, params, jitter=DEFAULT_JITTER):
    return predict_latent(x_star, fused.posterior(), params, jitter)


def decentralized_predict(x_star, fused, params, quadrature_order=DEFAULT_QUADRATURE_ORDER,
                          jitter=DEFAULT_JITTER):
    """P(success) at one test point (float) or many (array)."""
    mean, var = predict_latent(x_star, fused.posterior(), params, jitter)
    return predict_probability(mean, var, quadrature_order)


@dataclass
class AgentState:
    """One agent's onboard view: its own received-at events and what it has heard."""

    agent_id: int
    local_events: list = field(default_factory=list)
    pg_state: object = None
    received_packages: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = [e for e in self.local_events if e.rx_agent != self.agent_id]
        if bad:
            raise ValueError(f"agent {self.agent_id} holds {len(bad)} events received by other agents")

    def receive(self, pkg):
        """Store a package; a newer one for the same (sender, region) replaces the old."""
        if isinstance(pkg, (bytes, bytearray, memoryview)):
            pkg = decode_package(pkg)
        if not isinstance(pkg, InducingPackage):
            raise TypeError(f"expected InducingPackage or bytes, got {type(pkg).__name__}")
        self.received_packages[pkg.key] = pkg
        return pkg

    def fused(self, own=()):
        return fuse(list(self.received_packages.values()) + list(own))
