"""Local-selection and decentralized-sharing experiments, and map grids."""
import csv
from dataclasses import asdict, dataclass, field
import json

import numpy as np

from . import data as D
from .fusion import fuse
from .kernel import DEFAULT_JITTER, KernelParams, LocalityRegion, region_filter
from .policy import PolicyKind, SelectionError, build_package, subset_traces
from .polyagamma import gibbs_sample_w
from .sgpc import DEFAULT_QUADRATURE_ORDER, predict_latent, predict_probability
from .wire import encoded_size

_POLICY_STREAM = {"good": 0, "random": 1, "bad": 2}


@dataclass(frozen=True)
class ExperimentConfig:
    lengthscale: float = 0.289
    radius: float = 0.4
    # "auto" (medoid of each agent's standardized local data) or
    # {agent_id: 4-vector in standardized coordinates}
    centers: object = "auto"
    ms: tuple = (1, 2)
    policies: tuple = ("good", "random", "bad")
    permutations: int = 100
    train_fraction: float = 0.65
    gibbs_iterations: int = 100
    seed: int = 0
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER
    jitter: float = DEFAULT_JITTER
    max_m: int = 2

    def __post_init__(self):
        KernelParams(self.lengthscale)
        if not self.radius >= 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "ms", tuple(int(m) for m in self.ms))
        object.__setattr__(self, "policies", tuple(PolicyKind(p).value for p in self.policies))
        if not self.ms or any(not 1 <= m <= self.max_m for m in self.ms):
            raise ValueError(f"m values must lie in [1, {self.max_m}], got {self.ms}")
        if not self.policies:
            raise ValueError("no policies to run")
        if self.gibbs_iterations < 1:
            raise ValueError("gibbs_iterations must be >= 1")
        if self.quadrature_order < 5:
            raise ValueError("quadrature_order must be >= 5")
        if self.centers != "auto":
            centers = {int(k): tuple(float(v) for v in c) for k, c in dict(self.centers).items()}
            if any(len(c) != 4 for c in centers.values()):
                raise ValueError("region centers must be 4-vectors")
            object.__setattr__(self, "centers", centers)
        D.SplitPlan(self.seed, self.train_fraction, self.permutations)

    @property
    def params(self):
        return KernelParams(self.lengthscale)

    @property
    def plan(self):
        return D.SplitPlan(self.seed, self.train_fraction, self.permutations)

    def to_dict(self):
        d = asdict(self)
        d["ms"] = list(self.ms)
        d["policies"] = list(self.policies)
        if self.centers != "auto":
            d["centers"] = {str(k): list(v) for k, v in sorted(self.centers.items())}
        return d


@dataclass
class _Agent:
    agent_id: int
    X: np.ndarray
    y: np.ndarray
    region: LocalityRegion
    in_region: np.ndarray = field(default=None)  # boolean mask over X


def prepare_agents(events, config, standardizer=None):
    """Standardize pooled events and split them into per-receiver datasets."""
    std = standardizer or D.Standardizer.fit(events)
    X = std.apply(D.features(events))
    y = D.labels(events)
    rx = D.rx_agents(events)
    agents = []
    for a in sorted(set(rx.tolist())):
        sel = rx == a
        Xa, ya = X[sel], y[sel]
        if config.centers == "auto":
            center = Xa[D.medoid_index(Xa)]
        elif a in config.centers:
            center = np.asarray(config.centers[a])
        else:
            raise ValueError(f"no region center configured for agent {a}")
        region = LocalityRegion(center, config.radius)
        mask = np.zeros(Xa.shape[0], dtype=bool)
        mask[region_filter(Xa, region)] = True
        agents.append(_Agent(int(a), Xa, ya, region, mask))
    return std, agents


def _agent_packages(agent, config, perm):
    """Packages keyed by (policy, m) for one agent and permutation, plus the
    agent's in-region test indices.  Missing keys mean the region was too sparse."""
    params = config.params
    train, test = D.permutation_split(agent.X.shape[0], config.plan, perm, stream=agent.agent_id)
    tr = train[agent.in_region[train]]
    te = test[agent.in_region[test]]
    out = {}
    if tr.size == 0:
        return out, te
    Xr, yr = agent.X[tr], agent.y[tr]
    gen = np.random.default_rng([config.seed, perm, agent.agent_id, 0])
    w = gibbs_sample_w(Xr, yr, params, config.gibbs_iterations, rng=gen, jitter=config.jitter)
    for m in config.ms:
        if tr.size < m:
            continue
        table = subset_traces(Xr, m, params, config.jitter)
        for pol in config.policies:
            prng = np.random.default_rng([config.seed, perm, agent.agent_id, 1, m, _POLICY_STREAM[pol]])
            out[pol, m] = build_package(agent.agent_id, Xr, yr, w, agent.region, m, pol, params,
                                        prng, region_id=0, jitter=config.jitter, table=table)
    return out, te


def _predict(posterior, X, config):
    mean, var = predict_latent(X, posterior, config.params, config.jitter)
    return predict_probability(mean, var, config.quadrature_order)


def _new_cell():
    return {"permutations": [], "skipped": []}


def _finish(cell):
    rows = sorted(cell["permutations"], key=lambda r: r["permutation"])
    cell["permutations"] = rows
    cell["skipped"] = sorted(cell["skipped"], key=lambda r: r["permutation"])
    cell["completed"] = len(rows)
    cell["n_skipped"] = len(cell["skipped"])
    for key in ("acc", "nll", "trace"):
        cell[f"mean_{key}"] = float(np.mean([r[key] for r in rows])) if rows else None
    return cell


def _table(config):
    return {p: {str(m): _new_cell() for m in config.ms} for p in config.policies}


def run_local_experiment(events, config):
    """Each agent predicts its own in-region test points from its own package."""
    std, agents = prepare_agents(events, config)
    results = {str(a.agent_id): _table(config) for a in agents}
    for perm in range(config.permutations):
        for agent in agents:
            pkgs, te = _agent_packages(agent, config, perm)
            for pol in config.policies:
                for m in config.ms:
                    cell = results[str(agent.agent_id)][pol][str(m)]
                    if (pol, m) not in pkgs:
                        cell["skipped"].append({"permutation": perm, "reason": f"fewer than {m} training points in region"})
                        continue
                    if te.size == 0:
                        cell["skipped"].append({"permutation": perm, "reason": "no test points in region"})
                        continue
                    pkg = pkgs[pol, m]
                    p = _predict(pkg.posterior(), agent.X[te], config)
                    cell["permutations"].append({
                        "permutation": perm,
                        "acc": D.accuracy(p, agent.y[te]),
                        "nll": D.negative_log_likelihood(p, agent.y[te]),
                        "trace": pkg.trace,
                        "n_test": int(te.size),
                        "inducing": list(pkg.indices),
                    })
    for per_agent in results.values():
        for per_pol in per_agent.values():
            for cell in per_pol.values():
                _finish(cell)
    return {
        "experiment": "local",
        "config": config.to_dict(),
        "standardizer": std.to_dict(),
        "agents": {str(a.agent_id): {"n_events": int(a.X.shape[0]), "n_in_region": int(a.in_region.sum()),
                                     "center": list(a.region.center)} for a in agents},
        "results": results,
    }


def run_decentralized_experiment(events, config, keep_fused=False):
    """Agents fuse every agent's package and predict all in-region test points."""
    std, agents = prepare_agents(events, config)
    results = _table(config)
    fused_keep = {}
    excluded = []
    for perm in range(config.permutations):
        per_agent = [_agent_packages(a, config, perm) for a in agents]
        Xt, yt = [], []
        n_outside = 0
        for agent, (_, te_region) in zip(agents, per_agent):
            _, test = D.permutation_split(agent.X.shape[0], config.plan, perm, stream=agent.agent_id)
            inside_any = np.zeros(test.size, dtype=bool)
            for other in agents:
                inside_any[region_filter(agent.X[test], other.region)] = True
            Xt.append(agent.X[test[inside_any]])
            yt.append(agent.y[test[inside_any]])
            n_outside += int((~inside_any).sum())
        Xt = np.vstack(Xt)
        yt = np.concatenate(yt)
        excluded.append(n_outside)
        for pol in config.policies:
            for m in config.ms:
                cell = results[pol][str(m)]
                pk = [pk[pol, m] for pk, _ in per_agent if (pol, m) in pk]
                if len(pk) < len(agents):
                    cell["skipped"].append({"permutation": perm, "reason": f"a region has fewer than {m} training points"})
                    continue
                if yt.size == 0:
                    cell["skipped"].append({"permutation": perm, "reason": "no test points in any region"})
                    continue
                fused = fuse(pk)
                if keep_fused:
                    fused_keep[pol, m, perm] = fused
                p = _predict(fused.posterior(), Xt, config)
                cell["permutations"].append({
                    "permutation": perm,
                    "acc": D.accuracy(p, yt),
                    "nll": D.negative_log_likelihood(p, yt),
                    "trace": float(sum(x.trace for x in pk)),
                    "agent_traces": [x.trace for x in sorted(pk, key=lambda x: x.key)],
                    "n_test": int(yt.size),
                    "fused_m": int(fused.m),
                })
    for per_pol in results.values():
        for cell in per_pol.values():
            _finish(cell)
    out = {
        "experiment": "decentralized",
        "config": config.to_dict(),
        "standardizer": std.to_dict(),
        "agents": {str(a.agent_id): {"n_events": int(a.X.shape[0]), "n_in_region": int(a.in_region.sum()),
                                     "center": list(a.region.center)} for a in agents},
        "excluded_test_points": {"total": int(sum(excluded)), "per_permutation": excluded},
        "wire_bytes_per_package": {str(m): encoded_size(m) for m in config.ms},
        "results": results,
    }
    if keep_fused:
        return out, fused_keep
    return out


def build_shared_packages(events, config, policy, m, standardizer=None):
    """One package per agent from all of its in-region data (no split)."""
    std, agents = prepare_agents(events, config, standardizer)
    params = config.params
    pkgs = []
    for agent in agents:
        idx = np.flatnonzero(agent.in_region)
        if idx.size < m:
            raise SelectionError(f"agent {agent.agent_id}: region holds {idx.size} points, need {m}")
        gen = np.random.default_rng([config.seed, agent.agent_id, 0])
        w = gibbs_sample_w(agent.X[idx], agent.y[idx], params, config.gibbs_iterations, rng=gen,
                           jitter=config.jitter)
        prng = np.random.default_rng([config.seed, agent.agent_id, 1, m, _POLICY_STREAM[PolicyKind(policy).value]])
        pkgs.append(build_package(agent.agent_id, agent.X[idx], agent.y[idx], w, agent.region, m, policy,
                                  params, prng, jitter=config.jitter))
    return std, pkgs


# -- reporting ---------------------------------------------------------------------

def results_json(results):
    return json.dumps(results, sort_keys=True, indent=2) + "\n"


def summary_rows(results):
    """(scope, policy, m, mean_acc, mean_nll, mean_trace, completed, skipped) rows."""
    rows = []
    if results["experiment"] == "local":
        scopes = sorted(results["results"].items(), key=lambda kv: int(kv[0]))
        scopes = [(f"agent {k}", v) for k, v in scopes]
    else:
        scopes = [("fused", results["results"])]
    for scope, per_pol in scopes:
        for pol, per_m in per_pol.items():
            for m, cell in sorted(per_m.items(), key=lambda kv: int(kv[0])):
                rows.append((scope, pol, int(m), cell["mean_acc"], cell["mean_nll"], cell["mean_trace"],
                             cell["completed"], cell["n_skipped"]))
    return rows


def format_table(results):
    def f(v):
        return "   n/a" if v is None else f"{v:.4f}"

    lines = [f"{'scope':<10} {'policy':<7} {'m':>2} {'ACC':>7} {'NLL':>7} {'trace':>8} {'done':>5} {'skip':>5}"]
    for scope, pol, m, acc, nll, tr, done, skip in summary_rows(results):
        lines.append(f"{scope:<10} {pol:<7} {m:>2} {f(acc):>7} {f(nll):>7} {f(tr):>8} {done:>5} {skip:>5}")
    return "\n".join(lines) + "\n"


def write_summary_csv(results, dest):
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scope", "policy", "m", "mean_acc", "mean_nll", "mean_trace", "completed", "skipped"])
        for row in summary_rows(results):
            w.writerow(["" if v is None else v for v in row])


# -- map grid ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Rectangular easting/northing grid (metres) for one end of the link; the
    other end is held at ``fixed`` = (easting, northing)."""

    fixed: tuple
    easting: tuple
    northing: tuple
    nx: int
    ny: int
    vary: str = "rx"

    def __post_init__(self):
        if self.vary not in ("rx", "tx"):
            raise ValueError("vary must be 'rx' or 'tx'")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per axis")

    def points(self):
        e = np.linspace(self.easting[0], self.easting[1], self.nx) if self.nx > 1 else np.array([self.easting[0]], float)
        n = np.linspace(self.northing[0], self.northing[1], self.ny) if self.ny > 1 else np.array([self.northing[0]], float)
        E, N = np.meshgrid(e, n)
        E, N = E.ravel(), N.ravel()
        F = np.broadcast_to(np.asarray(self.fixed, dtype=float), (E.size, 2))
        moving = np.column_stack([E, N])
        raw = np.hstack([F, moving]) if self.vary == "rx" else np.hstack([moving, F])
        return moving, raw


def emit_map_grid(fused, grid, standardizer, params, path=None,
                  quadrature_order=DEFAULT_QUADRATURE_ORDER, jitter=DEFAULT_JITTER):
    """Predict over ``grid`` and write ``easting,northing,p_success,latent_mean,latent_var``.

    Returns the rows as an (n, 5) array.
    """
    moving, raw = grid.points()
    Xs = standardizer.apply(raw) if standardizer is not None else raw
    mean, var = predict_latent(Xs, fused.posterior(), params, jitter)
    p = predict_probability(mean, var, quadrature_order)
    rows = np.column_stack([moving, p, mean, var])
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["easting", "northing", "p_success", "latent_mean", "latent_var"])
            for r in rows:
                w.writerow([repr(float(v)) for v in r])
    return rows
