"""Communication events: CSV ingestion, standardization, splits, synthetic
datasets and the ACC / NLL metrics."""
import csv
from dataclasses import dataclass, field
import io
import math

import numpy as np
from scipy.special import expit

COLUMNS = ("tx_easting", "tx_northing", "rx_easting", "rx_northing", "label", "tx_agent", "rx_agent")
PROB_CLIP = 1e-12


class DataFormatError(ValueError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.row = row
        self.column = column


@dataclass(frozen=True)
class CommEvent:
    tx_easting: float
    tx_northing: float
    rx_easting: float
    rx_northing: float
    label: int
    tx_agent: int
    rx_agent: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.tx_agent == self.rx_agent:
            raise ValueError("an agent cannot transmit to itself")

    @property
    def features(self):
        return np.array([self.tx_easting, self.tx_northing, self.rx_easting, self.rx_northing])


def features(events):
    if not events:
        return np.zeros((0, 4))
    return np.array([[e.tx_easting, e.tx_northing, e.rx_easting, e.rx_northing] for e in events])


def labels(events):
    return np.array([e.label for e in events], dtype=np.int64)


def rx_agents(events):
    return np.array([e.rx_agent for e in events], dtype=np.int64)


# -- CSV ---------------------------------------------------------------------

def _open_text(src):
    if hasattr(src, "read"):
        return src, False
    return open(src, newline=""), True


def ingest_csv(src):
    """Read events from a path or text stream.

    Row numbers in errors are file line numbers (the header is row 1).
    """
    fh, close = _open_text(src)
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataFormatError("missing header row", row=1)
        header = [h.strip() for h in reader.fieldnames]
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise DataFormatError(f"missing column(s) {missing}", row=1, column=missing[0])
        reader.fieldnames = header
        events = []
        for lineno, rec in enumerate(reader, start=2):
            vals = {}
            for col in COLUMNS:
                raw = (rec.get(col) or "").strip()
                try:
                    vals[col] = float(raw) if col in COLUMNS[:4] else int(raw)
                except ValueError:
                    raise DataFormatError(f"cannot parse {raw!r}", row=lineno, column=col) from None
                if col in COLUMNS[:4] and not math.isfinite(vals[col]):
                    raise DataFormatError(f"non-finite coordinate {raw!r}", row=lineno, column=col)
            if vals["label"] not in (0, 1):
                raise DataFormatError(f"label must be 0 or 1, got {vals['label']}", row=lineno, column="label")
            if vals["tx_agent"] == vals["rx_agent"]:
                raise DataFormatError("tx_agent equals rx_agent", row=lineno, column="rx_agent")
            events.append(CommEvent(**vals))
        return events
    finally:
        if close:
            fh.close()


def write_csv(events, dest):
    fh, close = (dest, False) if hasattr(dest, "write") else (open(dest, "w", newline=""), True)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for e in events:
            w.writerow([repr(float(e.tx_easting)), repr(float(e.tx_northing)),
                        repr(float(e.rx_easting)), repr(float(e.rx_northing)),
                        e.label, e.tx_agent, e.rx_agent])
    finally:
        if close:
            fh.close()


def events_to_csv_text(events):
    buf = io.StringIO()
    write_csv(events, buf)
    return buf.getvalue()


# -- standardization -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, events_or_points):
        X = events_or_points if isinstance(events_or_points, np.ndarray) else features(list(events_or_points))
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 2:
            raise ValueError("need at least two events to standardize")
        std = X.std(axis=0)
        if np.any(std <= 0):
            raise ValueError(f"zero-variance dimension(s): {np.flatnonzero(std <= 0).tolist()}")
        return cls(X.mean(axis=0), std)

    def apply(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def invert(self, Xs):
        return np.asarray(Xs, dtype=float) * self.std + self.mean

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


fit_standardizer = Standardizer.fit


# -- splits ----------------------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    seed: int = 0
    train_fraction: float = 0.65
    permutations: int = 100

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.permutations < 1:
            raise ValueError("permutations must be >= 1")


def permutation_split(events, plan, permutation_index, stream=0):
    """(train, test) index arrays, each sorted; ``stream`` decorrelates
    independent splits (e.g. one per agent) under the same seed."""
    n = events if isinstance(events, (int, np.integer)) else len(events)
    if not 0 <= permutation_index < plan.permutations:
        raise ValueError(f"permutation index {permutation_index} out of range")
    perm = np.random.default_rng([plan.seed, stream, permutation_index]).permutation(n)
    n_train = int(math.floor(plan.train_fraction * n + 0.5))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


# -- synthetic data -------------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    """Lawnmower survey with TDMA broadcasts.

    Success probability is ``logistic(a - b * distance_m + field(tx, rx))``
    where ``field`` is a smooth random function with standard deviation
    ``noise`` and correlation length ``field_lengthscale`` metres.
    """

    n_agents: int = 2
    n_slots: int = 1800
    width: float = 800.0
    legs: int = 4
    leg_spacing: float = 150.0
    a: float = 4.0
    b: float = 0.008
    noise: float = 0.75
    field_lengthscale: float = 250.0
    position_noise: float = 2.0
    passes: int = 2
    seed: int = 0
    origins: tuple = field(default=None)


def _lawnmower(width, legs, spacing, n, phase, passes):
    pts = []
    for k in range(legs):
        y = k * spacing
        xs = (0.0, width) if k % 2 == 0 else (width, 0.0)
        pts += [(xs[0], y), (xs[1], y)]
    pts = np.array(pts)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    # ping-pong along the path; agents share the period, so repeated passes
    # revisit the same (tx, rx) configurations
    u = (phase + np.arange(n) * (passes * total / n)) % (2.0 * total)
    u = np.where(u > total, 2.0 * total - u, u)
    return np.column_stack([np.interp(u, s, pts[:, 0]), np.interp(u, s, pts[:, 1])])


def _random_field(rng, lengthscale, amplitude, n_features=200):
    W = rng.standard_normal((n_features, 4)) / lengthscale
    phase = rng.uniform(0.0, 2.0 * np.pi, n_features)
    scale = amplitude * math.sqrt(2.0 / n_features)

    def f(X):
        return scale * np.cos(X @ W.T + phase).sum(axis=1)

    return f


def synthesize_dataset(spec=None, **overrides):
    spec = spec or SynthSpec()
    if overrides:
        spec = SynthSpec(**{**spec.__dict__, **overrides})
    if spec.n_agents < 2:
        raise ValueError("need at least two agents")
    if spec.passes < 1 or spec.legs < 1 or spec.width <= 0 or spec.leg_spacing < 0 or spec.n_slots < spec.n_agents:
        raise ValueError("degenerate trajectories")
    if not spec.b > 0:
        raise ValueError("b must be positive")
    rng = np.random.default_rng(spec.seed)
    traj = []
    for i in range(spec.n_agents):
        if spec.origins is not None:
            origin = np.asarray(spec.origins[i], dtype=float)
        else:
            origin = np.array([i * spec.width / 3.0, i * spec.leg_spacing / 2.0])
        theta = i * np.pi / (2.0 * spec.n_agents)
        R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        path = _lawnmower(spec.width, spec.legs, spec.leg_spacing, spec.n_slots,
                          rng.uniform(0, spec.width), spec.passes)
        traj.append(path @ R.T + origin)
    traj = np.stack(traj)  # (agents, slots, 2)

    perturb = _random_field(rng, spec.field_lengthscale, spec.noise) if spec.noise > 0 else None
    rows, tx_ids, rx_ids = [], [], []
    for t in range(spec.n_slots):
        tx = t % spec.n_agents
        for rx in range(spec.n_agents):
            if rx != tx:
                rows.append(np.concatenate([traj[tx, t], traj[rx, t]]))
                tx_ids.append(tx)
                rx_ids.append(rx)
    X = np.array(rows)
    dist = np.linalg.norm(X[:, :2] - X[:, 2:], axis=1)
    logit = spec.a - spec.b * dist
    if perturb is not None:
        logit = logit + perturb(X)
    y = (rng.random(X.shape[0]) < expit(logit)).astype(int)
    if spec.position_noise > 0:
        X = X + rng.normal(0.0, spec.position_noise, X.shape)
    return [CommEvent(*map(float, x), int(lab), int(t), int(r)) for x, lab, t, r in zip(X, y, tx_ids, rx_ids)]


# -- metrics ------------------------------------------------------------------------

def _check(probs, labels_):
    p = np.asarray(probs, dtype=float).ravel()
    y = np.asarray(labels_).ravel()
    if p.size != y.size:
        raise ValueError("probs and labels differ in length")
    if p.size == 0:
        raise ValueError("empty input")
    return p, y


def accuracy(probs, labels_):
    """Fraction correct with the rule p > 0.5 -> 1, p <= 0.5 -> 0."""
    p, y = _check(probs, labels_)
    return float(np.mean((p > 0.5) == (y == 1)))


def negative_log_likelihood(probs, labels_):
    p, y = _check(probs, labels_)
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))


def medoid_index(points):
    """Index of the point minimizing the summed Euclidean distance to the others."""
    X = np.asarray(points, dtype=float)
    diff = X[:, None, :] - X[None, :, :]
    return int(np.argmin(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).sum(axis=1)))
