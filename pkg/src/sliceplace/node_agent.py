"""Low-level agent: per-cluster combinatorial UCB over the cluster's nodes."""
from __future__ import annotations

import math

import numpy as np

from .cluster_agent import N_OBJECTIVES


def ucb_bonus(t: int, pulls) -> np.ndarray:
    """Exploration width ``sqrt(3 ln t / (2 P))`` with the natural log."""
    return np.sqrt(3.0 * math.log(max(t, 1)) / (2.0 * np.asarray(pulls, dtype=float)))


class NodeAgent:
    """Keeps pull counts, empirical means and UCB indices for one cluster.

    The super arm is the ``D`` nodes with the largest summed UCB index.
    Because that objective is additive over nodes, taking the top ``D`` is the
    exact arg max over all subsets of size at most ``D``.
    """

    def __init__(self, nodes, n_objectives: int = N_OBJECTIVES):
        self.nodes = np.asarray(sorted(int(n) for n in nodes), dtype=np.int64)
        if self.nodes.size == 0:
            raise ValueError("a cluster needs at least one node")
        self.index = {int(n): i for i, n in enumerate(self.nodes)}
        n = self.nodes.size
        self.pulls = np.zeros(n, dtype=np.int64)
        self.means = np.zeros((n, n_objectives))
        self.ucb = np.full((n, n_objectives), np.inf)
        self.t = 0

    def scores(self) -> np.ndarray:
        return self.ucb.sum(axis=1)

    def select_super_arm(self, D: int) -> list[int]:
        size = min(int(D), self.nodes.size)
        order = np.lexsort((self.nodes, -self.scores()))
        return [int(n) for n in self.nodes[order[:size]]]

    def record_outcome(self, arms, rewards) -> None:
        rewards = np.asarray(rewards, dtype=float).reshape(len(arms), -1)
        self.t += 1
        for node, r in zip(arms, rewards):
            i = self.index[int(node)]
            p = self.pulls[i]
            self.means[i] = (p * self.means[i] + r) / (p + 1)
            self.pulls[i] = p + 1
        pulled = self.pulls > 0
        self.ucb[pulled] = self.means[pulled] + ucb_bonus(self.t, self.pulls[pulled])[:, None]
