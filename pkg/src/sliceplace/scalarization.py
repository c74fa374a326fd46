"""Generalized Gini aggregation of objective vectors and mixed-strategy ascent.

The generalized Gini function (GGF) sorts an objective vector in ascending
order and takes the dot product with strictly decreasing weights, so the
worst-off objective always gets the largest weight.
"""
from __future__ import annotations

import numpy as np


def ggi_weights(n: int, ratio: float = 2.0) -> np.ndarray:
    """Weights proportional to ``ratio**-(o-1)`` for ``o = 1..n``, normalized to sum 1."""
    if n < 1:
        raise ValueError("need at least one objective")
    if ratio <= 1:
        raise ValueError("ratio must exceed 1 for strictly decreasing weights")
    w = ratio ** -np.arange(n, dtype=float)
    return w / w.sum()


def ggf(x, w) -> float:
    return float(np.dot(np.sort(x), w))


def ggf_subgradient(x, w) -> np.ndarray:
    """Each component receives the weight of its rank; ties use a stable sort."""
    order = np.argsort(x, kind="stable")
    g = np.empty(len(w))
    g[order] = w
    return g


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project non-finite values")
    return _project(v)


def _project(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    # the threshold condition holds on a prefix of the sorted values
    rho = np.count_nonzero(u * np.arange(1, v.size + 1) > css) - 1
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def mixture_value(alpha, estimates, w) -> float:
    return float(np.sort(np.asarray(alpha) @ estimates) @ w)


def oga_optimize(estimates, w, alpha_init=None, steps: int = 10, return_path: bool = False):
    """Projected (super)gradient ascent on ``alpha -> GGF(alpha @ estimates)``.

    ``estimates`` is the ``K x n_objectives`` matrix of estimated reward
    vectors.  Step ``z`` (0-based) uses ``eta = 1/sqrt(z+1)``.  The iterate with
    the largest objective value is returned (the latest one on ties), so the
    result never scores below ``alpha_init``.
    """
    estimates = np.asarray(estimates, dtype=float)
    k = estimates.shape[0]
    if steps < 1:
        raise ValueError("need at least one ascent step")
    if alpha_init is None:
        alpha = np.full(k, 1.0 / k)
    else:
        alpha = project_to_simplex(alpha_init)
    path = [alpha]
    best, best_val = alpha, mixture_value(alpha, estimates, w)
    if k == 1:
        return (best, path) if return_path else best
    g = np.empty(len(w))
    mix = alpha @ estimates
    for z in range(steps):
        g[np.argsort(mix, kind="stable")] = w
        alpha = _project(alpha + (estimates @ g) / np.sqrt(z + 1.0))
        path.append(alpha)
        mix = alpha @ estimates
        val = float(np.sort(mix) @ w)
        if val >= best_val:
            best, best_val = alpha, val
    return (best, path) if return_path else best
