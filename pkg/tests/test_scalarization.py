import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sliceplace.scalarization import (ggf, ggf_subgradient, ggi_weights, mixture_value, oga_optimize,
                                      project_to_simplex)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def active_set_projection(v):
    """Exact projection by enumerating supports and checking the KKT conditions."""
    n = len(v)
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            s = list(support)
            tau = (v[s].sum() - 1.0) / size
            x = np.zeros(n)
            x[s] = v[s] - tau
            if np.all(x[s] >= 0) and np.all(v[[i for i in range(n) if i not in support]] <= tau + 1e-12):
                return x
    raise AssertionError("no KKT point found")


def test_weights():
    w = ggi_weights(6)
    assert w.sum() == pytest.approx(1.0)
    assert np.allclose(w[1:] / w[:-1], 0.5)
    assert w[0] == pytest.approx(32 / 63)
    with pytest.raises(ValueError):
        ggi_weights(3, ratio=1.0)


def test_ggf_example():
    assert ggf([0.2, 0.8], [2 / 3, 1 / 3]) == pytest.approx(0.4)


def test_ggf_is_impartial_and_favours_balance():
    w = ggi_weights(3)
    assert ggf([0.1, 0.5, 0.9], w) == ggf([0.9, 0.1, 0.5], w)
    assert ggf([0.5, 0.5, 0.5], w) > ggf([0.1, 0.5, 0.9], w)


@pytest.mark.parametrize("v, expected", [((1.0, 0.5), (0.75, 0.25)), ((-1.0, -1.0, 5.0), (0, 0, 1)),
                                         ((0.2, 0.3, 0.5), (0.2, 0.3, 0.5)), ((0.0, 0.0), (0.5, 0.5))])
def test_projection_examples(v, expected):
    assert np.allclose(project_to_simplex(v), expected, atol=1e-12)


def test_projection_vs_kkt_oracle_bulk():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        v = rng.normal(0, 2, 5)
        worst = max(worst, np.abs(project_to_simplex(v) - active_set_projection(v)).max())
    assert worst < 1e-6


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.integers(1, 8), elements=finite))
def test_projection_properties(v):
    x = project_to_simplex(v)
    assert np.all(x >= 0) and x.sum() == pytest.approx(1.0, abs=1e-9)
    # idempotent and never farther than any vertex
    assert np.allclose(project_to_simplex(x), x, atol=1e-9)
    d = np.linalg.norm(x - v)
    assert all(d <= np.linalg.norm(np.eye(len(v))[i] - v) + 1e-9 for i in range(len(v)))


@pytest.mark.parametrize("bad", [[], [np.nan, 1.0], [[1.0, 2.0]]])
def test_projection_rejects(bad):
    with pytest.raises(ValueError):
        project_to_simplex(bad)


@settings(max_examples=200, deadline=None)
@given(arrays(float, 6, elements=st.floats(0, 1)))
def test_subgradient_vs_finite_differences(x):
    srt = np.sort(x)
    if np.min(np.diff(srt)) < 1e-3:
        return  # finite differences are only meaningful away from ties
    w = ggi_weights(6)
    g = ggf_subgradient(x, w)
    h = 1e-6
    fd = np.array([(ggf(x + h * e, w) - ggf(x - h * e, w)) / (2 * h) for e in np.eye(6)])
    assert np.abs(g - fd).max() < 1e-4


@settings(max_examples=100, deadline=None)
@given(arrays(float, 5, elements=st.floats(0, 1)), arrays(float, 5, elements=st.floats(0, 1)))
def test_subgradient_inequality(x, y):
    # concavity: f(y) <= f(x) + g(x).(y - x) for every y, ties included
    w = ggi_weights(5)
    assert ggf(y, w) <= ggf(x, w) + ggf_subgradient(x, w) @ (y - x) + 1e-12


def test_subgradient_tie_uses_stable_order():
    w = np.array([0.5, 0.3, 0.2])
    assert ggf_subgradient([0.4, 0.4, 0.1], w).tolist() == [0.3, 0.2, 0.5]


def test_oga_two_cluster_concentrates():
    est = np.vstack([np.ones(6), np.zeros(6)])
    w = ggi_weights(6)
    best, path = oga_optimize(est, w, steps=10, return_path=True)
    assert best[0] > 0.9
    vals = [mixture_value(a, est, w) for a in path]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 6), elements=st.floats(0, 1)), st.integers(1, 20))
def test_oga_never_loses_to_start(est, steps):
    w = ggi_weights(6)
    start = np.full(4, 0.25)
    best = oga_optimize(est, w, start, steps)
    assert best.sum() == pytest.approx(1.0) and np.all(best >= 0)
    assert mixture_value(best, est, w) >= mixture_value(start, est, w) - 1e-12


def test_oga_near_grid_optimum():
    rng = np.random.default_rng(5)
    est = rng.uniform(0, 1, (3, 6))
    w = ggi_weights(6)
    grid = [np.array([a, b, 1 - a - b]) for a in np.linspace(0, 1, 101) for b in np.linspace(0, 1, 101)
            if a + b <= 1 + 1e-12]
    opt = max(mixture_value(np.clip(g, 0, 1), est, w) for g in grid)
    got = mixture_value(oga_optimize(est, w, steps=500), est, w)
    assert got >= opt - 5e-3


def test_oga_single_cluster_and_validation():
    assert oga_optimize(np.ones((1, 6)), ggi_weights(6)).tolist() == [1.0]
    with pytest.raises(ValueError):
        oga_optimize(np.ones((2, 6)), ggi_weights(6), steps=0)
