import math

from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
import mpmath
import numpy as np
import pytest

from commmap.kernel import (
    KernelParams,
    LocalityRegion,
    cholesky_lower,
    cross_gram,
    gram,
    kernel_eval,
    locality_radius,
    region_filter,
)
from oracles import se_kernel

P = KernelParams(0.289)
coords = st.floats(-5, 5, allow_nan=False, width=64)
point = arrays(np.float64, 4, elements=coords)


def test_params_validation():
    with pytest.raises(ValueError):
        KernelParams(0.0)
    with pytest.raises(ValueError):
        KernelParams(-1.0)
    with pytest.raises(ValueError):
        KernelParams(0.3, signal_variance=2.0)
    assert KernelParams(0.3).signal_variance == 1.0


def test_kernel_examples():
    x = np.zeros(4)
    assert kernel_eval(x, x, P) == 1.0
    l = 0.7
    d = np.array([l * math.sqrt(2), 0, 0, 0])
    assert kernel_eval(x, d, KernelParams(l)) == pytest.approx(math.exp(-1), rel=1e-15)


def test_kernel_reference_value_high_precision():
    mpmath.mp.dps = 40
    expected = float(mpmath.exp(-mpmath.mpf("0.16") / (2 * mpmath.mpf("0.289") ** 2)))
    got = kernel_eval(np.zeros(4), np.array([0.4, 0, 0, 0]), P)
    assert got == pytest.approx(expected, rel=1e-14)
    assert got == pytest.approx(0.38372, abs=1e-5)


@given(point, point)
def test_kernel_symmetric_and_bounded(a, b):
    k = kernel_eval(a, b, P)
    assert k == kernel_eval(b, a, P)
    assert 0.0 <= k <= 1.0
    if np.array_equal(a, b):
        assert k == 1.0
    elif np.sum((a - b) ** 2) > 1e-6:
        assert k < 1.0


def test_gram_examples():
    np.testing.assert_array_equal(gram(np.zeros((1, 4)), P), [[1.0]])
    np.testing.assert_array_equal(gram(np.ones((2, 4)), P), np.ones((2, 2)))
    l = 0.5
    X = np.array([[0, 0, 0, 0], [l * math.sqrt(2), 0, 0, 0]])
    np.testing.assert_allclose(gram(X, KernelParams(l)), [[1, math.exp(-1)], [math.exp(-1), 1]], rtol=1e-15)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 4), elements=coords))
def test_gram_matches_elementwise(X):
    K = gram(X, P)
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_array_equal(np.diag(K), 1.0)
    ref = np.array([[kernel_eval(a, b, P) for b in X] for a in X])
    np.testing.assert_allclose(K, ref, rtol=1e-12, atol=1e-300)


def test_cross_gram_examples():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(5, 4))
    np.testing.assert_allclose(cross_gram(X, X, P), gram(X, P), rtol=1e-14)
    np.testing.assert_allclose(cross_gram(X, X[2:3], P)[:, 0], gram(X, P)[:, 2], rtol=1e-14)
    Z = np.zeros((1, 4))
    X2 = np.array([[0.1, 0, 0, 0], [0, 0.3, 0, 0.2]])
    d = np.linalg.norm(X2, axis=1)
    np.testing.assert_allclose(cross_gram(X2, Z, P)[:, 0], np.exp(-d**2 / (2 * 0.289**2)), rtol=1e-14)
    np.testing.assert_allclose(cross_gram(X2, X, P), se_kernel(X2, X, 0.289), rtol=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_jittered_gram_factorizes_for_distinct_points(n, seed):
    X = np.random.default_rng(seed).normal(size=(n, 4))
    L = cholesky_lower(gram(X, P), 1e-8)
    assert np.all(np.isfinite(L))


def test_locality_radius_examples():
    assert locality_radius(1.0, math.exp(-2)) == pytest.approx(2.0, rel=1e-15)
    assert locality_radius(0.289, 0.3836) == pytest.approx(0.4, abs=1e-3)
    assert locality_radius(0.289, 1 - 1e-15) < 1e-6
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            locality_radius(0.289, bad)


@given(st.floats(0.01, 10), st.floats(1e-12, 1 - 1e-9))
def test_locality_radius_inverts_kernel(l, eps):
    r = locality_radius(l, eps)
    k = kernel_eval(np.zeros(4), np.array([r, 0, 0, 0]), KernelParams(l))
    assert k == pytest.approx(eps, rel=1e-12)


def test_region_validation():
    with pytest.raises(ValueError):
        LocalityRegion(np.zeros(4), -0.1)


def test_region_filter_examples():
    rng = np.random.default_rng(3)
    X = rng.normal(scale=0.5, size=(200, 4))
    assert region_filter(X, LocalityRegion(X[7], 0.0)).tolist() == [7]
    assert region_filter(X, LocalityRegion(X[0], math.inf)).tolist() == list(range(200))
    region = LocalityRegion(X[11], 0.4)
    brute = [i for i in range(200) if math.sqrt(sum((X[i, k] - X[11, k]) ** 2 for k in range(4))) <= 0.4]
    assert region_filter(X, region).tolist() == brute
    assert all(region.contains(X[i]) for i in brute)
    assert region_filter([], region).size == 0
