"""Placement policies sharing one slot-level interface.

A policy sees the batch of requests arriving in a slot (``begin_slot``),
proposes an ordered node list per request (``place``), learns from the
per-node reward vectors of that placement (``observe``) and closes the slot
(``end_slot``).  ``HierarchicalPolicy`` is the two-level bandit; the others
are the centralized baselines that work on the whole topology.
"""
from __future__ import annotations

import numpy as np

from .cluster_agent import (N_FEATURES, N_OBJECTIVES, ContextBuilder, HighLevelAgent,
                            request_features)
from .clustering import Clustering
from .node_agent import NodeAgent
from .scalarization import ggf, ggi_weights
from .topology import N_NODE_RESOURCES, NetworkGraph

POLICY_NAMES = ("helios", "random", "egreedy", "linucb", "c2ucb", "cts")


class Policy:
    name = "policy"

    def begin_slot(self, t: int, graph: NetworkGraph, batch) -> None:
        pass

    def place(self, request, graph: NetworkGraph) -> list[int]:
        raise NotImplementedError

    def observe(self, request, nodes, rewards) -> None:
        pass

    def end_slot(self, t: int) -> None:
        pass


def _top(scores, ids, size: int) -> list[int]:
    """Indices of the ``size`` largest scores; ties go to the smaller id."""
    order = np.lexsort((ids, -np.asarray(scores)))
    return [int(i) for i in ids[order[:size]]]


class HierarchicalPolicy(Policy):
    """Cluster chosen by the high-level agent, nodes by that cluster's low-level agent."""

    name = "helios"

    def __init__(self, graph: NetworkGraph, clustering: Clustering, gamma=0.1, steps=10,
                 weights=None, rng=None, vnf_max=50.0, vlink_max=100.0, chain_max=4,
                 per_request=False):
        self.clustering = clustering
        self.contexts = ContextBuilder(graph, clustering, vnf_max, vlink_max, chain_max)
        self.hla = HighLevelAgent(clustering.k, gamma=gamma, steps=steps, weights=weights, rng=rng)
        self.llas = [NodeAgent(m) for m in clustering.members]
        self.per_request = per_request
        self.cluster = -1
        self._x = None
        self.estimates = None
        self._slot_rewards: list[np.ndarray] = []
        self.last_reward = None

    def _choose(self, graph, batch):
        self._x = self.contexts.build(graph, batch)
        self.estimates = self.hla.estimate_rewards(self._x)
        self.cluster = self.hla.select_cluster(self.estimates)

    def begin_slot(self, t, graph, batch):
        self._slot_rewards = []
        self.last_reward = None
        if batch and not self.per_request:
            self._choose(graph, batch)

    def place(self, request, graph):
        if self.per_request:
            self._choose(graph, [request])
        return self.llas[self.cluster].select_super_arm(request.length)

    def observe(self, request, nodes, rewards):
        self.llas[self.cluster].record_outcome(nodes, rewards)
        r = np.asarray(rewards).mean(axis=0)
        if self.per_request:
            self.hla.update(self._x[self.cluster], r)
        self._slot_rewards.append(r)

    def end_slot(self, t):
        if not self._slot_rewards:
            return
        self.last_reward = np.mean(self._slot_rewards, axis=0)
        if not self.per_request:
            self.hla.update(self._x[self.cluster], self.last_reward)


class NodeContextBuilder:
    """Per-node version of the cluster context: node-local availability + request features."""

    def __init__(self, graph: NetworkGraph, vnf_max=50.0, vlink_max=100.0, chain_max=4):
        self.incidence = np.zeros((graph.n_nodes, graph.n_links))
        for lid, (u, v) in enumerate(graph.edges):
            self.incidence[u, lid] = 1.0
            self.incidence[v, lid] = 1.0
        self.vnf_max, self.vlink_max, self.chain_max = vnf_max, vlink_max, chain_max

    def build(self, graph: NetworkGraph, request) -> np.ndarray:
        cap, avail = graph.node_capacity, graph.node_available
        x = np.empty((graph.n_nodes, N_FEATURES))
        x[:, :N_NODE_RESOURCES] = np.divide(avail, cap, out=np.zeros_like(cap), where=cap > 0)
        lcap = self.incidence @ graph.link_capacity
        lavail = self.incidence @ graph.link_available
        x[:, N_NODE_RESOURCES] = np.divide(lavail, lcap, out=np.ones_like(lcap), where=lcap > 0)
        x[:, N_NODE_RESOURCES + 1:] = request_features([request], self.vnf_max, self.vlink_max, self.chain_max)
        np.clip(x, 0.0, 1.0, out=x)
        norms = np.maximum(1.0, np.linalg.norm(x, axis=1))
        return x / norms[:, None]


class RandomPolicy(Policy):
    name = "random"

    def __init__(self, graph: NetworkGraph, rng=None):
        self.n = graph.n_nodes
        self.rng = np.random.default_rng(rng)

    def place(self, request, graph):
        size = min(request.length, self.n)
        return [int(i) for i in self.rng.choice(self.n, size=size, replace=False)]


class EpsilonGreedyPolicy(Policy):
    """Explores uniformly with probability epsilon, else exploits global per-node means."""

    name = "egreedy"

    def __init__(self, graph: NetworkGraph, epsilon=0.5, weights=None, rng=None):
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        self.epsilon = epsilon
        self.weights = ggi_weights(N_OBJECTIVES) if weights is None else np.asarray(weights)
        self.rng = np.random.default_rng(rng)
        self.ids = np.arange(graph.n_nodes)
        self.means = np.zeros(graph.n_nodes)
        self.pulls = np.zeros(graph.n_nodes, dtype=np.int64)
        self.explored = 0
        self.decisions = 0

    def place(self, request, graph):
        size = min(request.length, len(self.ids))
        self.decisions += 1
        if self.rng.random() < self.epsilon:
            self.explored += 1
            return [int(i) for i in self.rng.choice(len(self.ids), size=size, replace=False)]
        return _top(self.means, self.ids, size)

    def observe(self, request, nodes, rewards):
        for n, r in zip(nodes, np.asarray(rewards)):
            p = self.pulls[n]
            self.means[n] = (p * self.means[n] + ggf(r, self.weights)) / (p + 1)
            self.pulls[n] = p + 1


class LinUCBPolicy(Policy):
    """Disjoint per-node ridge models of the GGF-scalarized reward with a UCB bonus."""

    name = "linucb"

    def __init__(self, graph: NetworkGraph, beta=1.0, gamma=0.1, weights=None, **ctx):
        n = graph.n_nodes
        self.beta, self.gamma = beta, gamma
        self.weights = ggi_weights(N_OBJECTIVES) if weights is None else np.asarray(weights)
        self.contexts = NodeContextBuilder(graph, **ctx)
        self.ids = np.arange(n)
        self.A_inv = np.tile(np.eye(N_FEATURES) / gamma, (n, 1, 1))
        self.b = np.zeros((n, N_FEATURES))
        self._x = None

    def scores(self, x) -> np.ndarray:
        theta = np.einsum("nij,nj->ni", self.A_inv, self.b)
        width = np.sqrt(np.einsum("ni,nij,nj->n", x, self.A_inv, x))
        return np.einsum("ni,ni->n", x, theta) + self.beta * width

    def place(self, request, graph):
        self._x = self.contexts.build(graph, request)
        return _top(self.scores(self._x), self.ids, min(request.length, len(self.ids)))

    def observe(self, request, nodes, rewards):
        for n, r in zip(nodes, np.asarray(rewards)):
            x = self._x[n]
            Ax = self.A_inv[n] @ x
            self.A_inv[n] -= np.outer(Ax, Ax) / (1.0 + x @ Ax)
            self.b[n] += x * ggf(r, self.weights)


class C2UCBPolicy(Policy):
    """Shared per-objective ridge model; top-D by GGF estimate plus confidence width."""

    name = "c2ucb"

    def __init__(self, graph: NetworkGraph, beta=1.0, gamma=0.1, weights=None, **ctx):
        self.beta, self.gamma = beta, gamma
        self.weights = ggi_weights(N_OBJECTIVES) if weights is None else np.asarray(weights)
        self.contexts = NodeContextBuilder(graph, **ctx)
        self.ids = np.arange(graph.n_nodes)
        self.A = np.zeros((N_FEATURES, N_FEATURES))
        self.B = np.zeros((N_FEATURES, N_OBJECTIVES))
        self.theta = np.zeros((N_FEATURES, N_OBJECTIVES))
        self.cov = np.eye(N_FEATURES) / gamma
        self._x = None

    def _gg(self, pred) -> np.ndarray:
        return np.sort(np.clip(pred, 0.0, 1.0), axis=1) @ self.weights

    def scores(self, x) -> np.ndarray:
        width = np.sqrt(np.einsum("ni,ij,nj->n", x, self.cov, x))
        return self._gg(x @ self.theta) + self.beta * width

    def place(self, request, graph):
        self._x = self.contexts.build(graph, request)
        return _top(self.scores(self._x), self.ids, min(request.length, len(self.ids)))

    def observe(self, request, nodes, rewards):
        x = self._x[list(nodes)]
        self.A += x.T @ x
        self.B += x.T @ np.asarray(rewards)
        self.cov = np.linalg.inv(self.A + self.gamma * np.eye(N_FEATURES))
        self.theta = self.cov @ self.B


class CTSPolicy(C2UCBPolicy):
    """Thompson sampling on the shared Bayesian linear model (prior N(0, I/gamma))."""

    name = "cts"

    def __init__(self, graph: NetworkGraph, v=0.25, gamma=1.0, weights=None, rng=None, **ctx):
        super().__init__(graph, beta=0.0, gamma=gamma, weights=weights, **ctx)
        self.v = v
        self.rng = np.random.default_rng(rng)

    def sample_theta(self) -> np.ndarray:
        if self.v == 0:
            return self.theta
        chol = np.linalg.cholesky(self.cov)
        z = self.rng.standard_normal(self.theta.shape)
        return self.theta + self.v * chol @ z

    def scores(self, x) -> np.ndarray:
        return self._gg(x @ self.sample_theta())


def make_policy(name: str, graph: NetworkGraph, clustering: Clustering | None = None, *,
                rng=None, gamma=0.1, steps=10, weights=None, epsilon=0.5, beta=1.0,
                cts_v=0.25, cts_gamma=1.0, vnf_max=50.0, vlink_max=100.0, chain_max=4,
                per_request=False) -> Policy:
    ctx = dict(vnf_max=vnf_max, vlink_max=vlink_max, chain_max=chain_max)
    if name == "helios":
        if clustering is None:
            raise ValueError("the hierarchical policy needs a clustering")
        return HierarchicalPolicy(graph, clustering, gamma=gamma, steps=steps, weights=weights,
                                  rng=rng, per_request=per_request, **ctx)
    if name == "random":
        return RandomPolicy(graph, rng=rng)
    if name == "egreedy":
        return EpsilonGreedyPolicy(graph, epsilon=epsilon, weights=weights, rng=rng)
    if name == "linucb":
        return LinUCBPolicy(graph, beta=beta, gamma=gamma, weights=weights, **ctx)
    if name == "c2ucb":
        return C2UCBPolicy(graph, beta=beta, gamma=gamma, weights=weights, **ctx)
    if name == "cts":
        return CTSPolicy(graph, v=cts_v, gamma=cts_gamma, weights=weights, rng=rng, **ctx)
    raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")
