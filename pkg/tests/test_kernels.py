import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from esnlens import kernels, set_backend


def both_backends(func, *args):
    out = {}
    for name in ("numba", "numpy"):
        previous = set_backend(name)
        try:
            out[name] = func(*args)
        finally:
            set_backend(previous)
    return out["numba"], out["numpy"]


@given(
    n=st.integers(1, 30),
    T=st.integers(1, 60),
    alpha=st.floats(0.05, 1.0),
    activation=st.sampled_from([kernels.TANH, kernels.IDENTITY]),
    seed=st.integers(0, 2**31),
)
def test_leaky_recurrence_backends_agree(n, T, alpha, activation, seed):
    rng = np.random.default_rng(seed)
    W = rng.uniform(-1, 1, (n, n)) * 0.9 / max(1.0, math.sqrt(n))
    drive = rng.standard_normal((T, n))
    x0 = rng.uniform(-1, 1, n)
    a, b = both_backends(kernels.leaky_recurrence, W, drive, alpha, x0, activation)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_leaky_recurrence_loop_oracle(backend):
    rng = np.random.default_rng(3)
    W = rng.uniform(-0.2, 0.2, (4, 4))
    drive = rng.standard_normal((5, 4))
    x = np.zeros(4)
    expected = []
    for t in range(5):
        x = 0.3 * x + 0.7 * np.tanh(W @ x + drive[t])
        expected.append(x)
    got = kernels.leaky_recurrence(W, drive, 0.7, np.zeros(4))
    np.testing.assert_allclose(got, np.array(expected), atol=1e-15)


def _narma_loop(u):
    # written directly from y(t+1) = tanh(0.3 y(t) + 0.05 y(t) sum_{i<10} y(t-i) + 1.5 u(t-9) u(t) + 0.1)
    y = [0.0] * (len(u) + 1)
    for t in range(9, len(u)):
        s = sum(y[t - i] for i in range(10))
        y[t + 1] = math.tanh(0.3 * y[t] + 0.05 * y[t] * s + 1.5 * u[t - 9] * u[t] + 0.1)
    return np.array(y)


@given(st.lists(st.floats(-1, 1), min_size=11, max_size=80))
def test_narma_backends_match_loop(u):
    u = np.array(u)
    a, b = both_backends(kernels.narma10, u)
    oracle = _narma_loop(list(u))
    np.testing.assert_allclose(a, oracle, atol=1e-14)
    np.testing.assert_allclose(b, oracle, atol=1e-14)


def test_narma_first_outputs_are_zero(backend):
    y = kernels.narma10(np.ones(30))
    assert np.all(y[:10] == 0.0)
    assert y[10] == pytest.approx(math.tanh(1.5 + 0.1))


@given(
    T=st.integers(1, 40),
    S=st.integers(1, 40),
    d=st.integers(1, 8),
    seed=st.integers(0, 2**31),
)
def test_pairwise_matches_cdist(T, S, d, seed):
    rng = np.random.default_rng(seed)
    A, B = rng.standard_normal((T, d)), rng.standard_normal((S, d))
    a, b = both_backends(kernels.pairwise_distances, A, B)
    ref = cdist(A, B)
    np.testing.assert_allclose(a, ref, atol=1e-12)
    np.testing.assert_allclose(b, ref, atol=1e-12)


def test_pairwise_identical_rows_give_identical_distances(backend):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((7, 3))
    A = np.vstack([A, A])
    D = kernels.pairwise_distances(A, A)
    assert np.array_equal(D[:7], D[7:])
    assert np.all(np.diag(D) == 0.0)
    assert np.array_equal(D, D.T)
