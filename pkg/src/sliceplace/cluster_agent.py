"""High-level agent: contextual cluster selection with a shared ridge model.

Each cluster is described by an 8-feature context.  One ridge regression per
objective (sharing the Gram matrix) predicts the reward vector of every
cluster, a GGF-optimal mixed strategy over clusters is refined by projected
gradient ascent, and the cluster is sampled from it.
"""
from __future__ import annotations

import numpy as np

from .clustering import Clustering
from .scalarization import ggi_weights, oga_optimize
from .topology import N_NODE_RESOURCES, NetworkGraph

N_FEATURES = 8
N_OBJECTIVES = N_NODE_RESOURCES + 2  # acceptance, 4 node resources, bandwidth


def request_features(batch, vnf_max: float, vlink_max: float, chain_max: int) -> np.ndarray:
    """Normalized (node demand, bandwidth demand, chain length) of a batch; zeros if empty."""
    n = len(batch)
    if n == 0:
        return np.zeros(3)
    node = sum(float(r.vnf_demand.sum()) for r in batch)
    bw = sum(float(r.link_demand.sum()) for r in batch)
    length = sum(r.length for r in batch)
    node_f = node / (N_NODE_RESOURCES * vnf_max * chain_max * n)
    bw_f = bw / (vlink_max * (chain_max - 1) * n) if chain_max > 1 else 0.0
    return np.clip([node_f, bw_f, length / (chain_max * n)], 0.0, 1.0)


class ContextBuilder:
    """Precomputes cluster aggregation matrices so per-slot contexts are cheap."""

    def __init__(self, graph: NetworkGraph, clustering: Clustering,
                 vnf_max: float = 50.0, vlink_max: float = 100.0, chain_max: int = 4):
        k, n = clustering.k, graph.n_nodes
        self.node_member = np.zeros((k, n))
        self.node_member[clustering.labels, np.arange(n)] = 1.0
        self.link_member = np.zeros((k, graph.n_links))
        for c, nodes in enumerate(clustering.members):
            intra = clustering.intra_links(graph, c)
            if not intra:
                # singleton or link-less cluster: fall back to incident links
                nodes_set = set(nodes)
                intra = [lid for lid, (u, v) in enumerate(graph.edges) if u in nodes_set or v in nodes_set]
            self.link_member[c, intra] = 1.0
        self.vnf_max, self.vlink_max, self.chain_max = vnf_max, vlink_max, chain_max

    def build(self, graph: NetworkGraph, batch) -> np.ndarray:
        node_cap = self.node_member @ graph.node_capacity
        node_avail = self.node_member @ graph.node_available
        node_frac = np.divide(node_avail, node_cap, out=np.zeros_like(node_cap), where=node_cap > 0)
        link_cap = self.link_member @ graph.link_capacity
        link_avail = self.link_member @ graph.link_available
        link_frac = np.divide(link_avail, link_cap, out=np.ones_like(link_cap), where=link_cap > 0)
        req = request_features(batch, self.vnf_max, self.vlink_max, self.chain_max)
        k = node_cap.shape[0]
        x = np.empty((k, N_FEATURES))
        x[:, :N_NODE_RESOURCES] = np.clip(node_frac, 0.0, 1.0)
        x[:, N_NODE_RESOURCES] = np.clip(link_frac, 0.0, 1.0)
        x[:, N_NODE_RESOURCES + 1:] = req
        return x / max(1.0, float(np.linalg.norm(x)))


def build_contexts(graph: NetworkGraph, clustering: Clustering, batch, vnf_max=50.0,
                   vlink_max=100.0, chain_max=4) -> np.ndarray:
    """Per-cluster contexts, stacked as a ``K x 8`` array with Frobenius norm <= 1."""
    return ContextBuilder(graph, clustering, vnf_max, vlink_max, chain_max).build(graph, batch)


class HighLevelAgent:
    def __init__(self, n_clusters: int, gamma: float = 0.1, steps: int = 10, weights=None,
                 n_features: int = N_FEATURES, n_objectives: int = N_OBJECTIVES, rng=None):
        if gamma <= 0:
            raise ValueError("ridge regularizer must be positive")
        self.n_clusters = n_clusters
        self.gamma = gamma
        self.steps = steps
        self.weights = ggi_weights(n_objectives) if weights is None else np.asarray(weights, dtype=float)
        self.A = np.zeros((n_features, n_features))
        self.b = np.zeros((n_features, n_objectives))
        self.theta = np.zeros((n_features, n_objectives))
        self.alpha = np.full(n_clusters, 1.0 / n_clusters)
        self.n_updates = 0
        self.rng = np.random.default_rng(rng)

    def estimate_rewards(self, contexts) -> np.ndarray:
        """``K x n_objectives`` predicted rewards, clipped to [0, 1]."""
        return np.clip(np.asarray(contexts) @ self.theta, 0.0, 1.0)

    def select_cluster(self, estimates) -> int:
        self.alpha = oga_optimize(estimates, self.weights, self.alpha, self.steps)
        p = self.alpha / self.alpha.sum()
        return int(self.rng.choice(self.n_clusters, p=p))

    def update(self, context, reward) -> None:
        x = np.asarray(context, dtype=float)
        r = np.asarray(reward, dtype=float)
        self.n_updates += 1
        if not np.any(x):
            return
        self.A += np.outer(x, x)
        self.b += np.outer(x, r)
        reg = self.A + self.gamma * np.eye(len(x))
        self.theta = np.linalg.solve(reg, self.b)
