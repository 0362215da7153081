import json
import os
import subprocess
import sys

import numpy as np
import pytest

from commmap import _loops
from commmap._accel import HAVE_NUMBA

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def test_sqdist_twins_agree():
    rng = np.random.default_rng(0)
    X, Z = rng.normal(size=(37, 4)), rng.normal(size=(11, 4))
    Z[3] = X[5]
    a, b = _loops.sqdist_numpy(X, Z), _loops.sqdist_numba(X, Z)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)
    assert a[5, 3] == 0.0 and b[5, 3] == 0.0


def test_pg_series_twins_agree():
    rng = np.random.default_rng(1)
    c = rng.normal(scale=3, size=50)
    exps = rng.standard_exponential((50, 200))
    means = np.tanh(np.abs(c) / 2) / (2 * np.abs(c))
    np.testing.assert_allclose(_loops.pg_series_numpy(c, exps, means), _loops.pg_series_numba(c, exps, means),
                               rtol=1e-13)


def test_projection_twins_agree():
    rng = np.random.default_rng(2)
    C = rng.normal(scale=0.3, size=(25, 4))
    d2 = ((C[:, None] - C[None]) ** 2).sum(-1)
    K = np.exp(-d2 / (2 * 0.289**2))
    diag = 1.0 + 1e-8
    Kc = K + 1e-8 * np.eye(25)
    np.testing.assert_allclose(_loops.single_projections_numpy(Kc, diag), _loops.single_projections_numba(Kc, diag),
                               rtol=1e-13)
    a = _loops.pair_projections_numpy(Kc, K, diag)
    b = _loops.pair_projections_numba(Kc, K, diag)
    assert np.all(np.isnan(np.diag(a))) and np.all(np.isnan(np.diag(b)))
    iu = np.triu_indices(25, 1)
    np.testing.assert_allclose(a[iu], b[iu], rtol=1e-11)


SCRIPT = """
import json
from commmap import ExperimentConfig, backend_name, run_decentralized_experiment, synthesize_dataset
res = run_decentralized_experiment(synthesize_dataset(seed=1), ExperimentConfig(permutations=3, gibbs_iterations=10))
print(json.dumps({"backend": backend_name(),
                  "nll": [res["results"][p]["2"]["mean_nll"] for p in ("good", "random", "bad")]}))
"""


def run_with(flag):
    env = dict(os.environ, COMMMAP_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_pipeline_agrees_across_backends():
    fast, slow = run_with("1"), run_with("0")
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"
    np.testing.assert_allclose(fast["nll"], slow["nll"], rtol=1e-9)
