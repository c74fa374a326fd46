"""Louvain community detection and cluster-count control."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .topology import NetworkGraph


@dataclass
class Clustering:
    """Partition of the graph nodes into connected, non-empty clusters."""

    labels: np.ndarray
    members: list[list[int]]

    @property
    def k(self) -> int:
        return len(self.members)

    def __len__(self):
        return len(self.members)

    @classmethod
    def from_labels(cls, labels) -> "Clustering":
        """Relabel so that clusters are numbered by their smallest node id."""
        labels = np.asarray(labels)
        order: dict[int, int] = {}
        for lab in labels:
            if int(lab) not in order:
                order[int(lab)] = len(order)
        new = np.array([order[int(lab)] for lab in labels], dtype=np.int64)
        members = [[] for _ in order]
        for n, c in enumerate(new):
            members[c].append(n)
        return cls(new, members)

    def intra_links(self, graph: NetworkGraph, k: int) -> list[int]:
        return [lid for lid, (u, v) in enumerate(graph.edges)
                if self.labels[u] == k and self.labels[v] == k]

    def validate(self, graph: NetworkGraph) -> None:
        seen = sorted(n for m in self.members for n in m)
        if seen != list(range(graph.n_nodes)):
            raise AssertionError("clusters do not partition the node set")
        for k, nodes in enumerate(self.members):
            if not nodes:
                raise AssertionError(f"cluster {k} is empty")
            if not graph.is_connected(nodes):
                raise AssertionError(f"cluster {k} is not connected")

    def to_csv(self) -> str:
        rows = ["node_id,cluster"]
        rows.extend(f"{n},{int(c)}" for n, c in enumerate(self.labels))
        return "\n".join(rows) + "\n"


def modularity(graph: NetworkGraph, labels, resolution: float = 1.0) -> float:
    """Newman modularity of ``labels`` on the unweighted graph."""
    m = graph.n_links
    if m == 0:
        return 0.0
    labels = np.asarray(labels)
    degree = np.array([len(a) for a in graph.adj], dtype=float)
    n_comm = int(labels.max()) + 1
    internal = np.zeros(n_comm)
    for u, v in graph.edges:
        if labels[u] == labels[v]:
            internal[labels[u]] += 1
    deg_sum = np.bincount(labels, weights=degree, minlength=n_comm)
    return float(np.sum(internal / m - resolution * (deg_sum / (2 * m)) ** 2))


def _seed_from(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2**63 - 1))
    return 0 if rng is None else int(rng)


def _local_moves(adj, degree, two_m, resolution, rng):
    """One Louvain level: greedy node moves until no node changes community."""
    n = len(adj)
    comm = list(range(n))
    tot = list(degree)
    moved_any = False
    while True:
        moved = False
        for i in rng.permutation(n):
            i = int(i)
            ci = comm[i]
            ki = degree[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                if j != i:
                    c = comm[j]
                    links[c] = links.get(c, 0.0) + w
            tot[ci] -= ki
            best = ci
            best_gain = links.get(ci, 0.0) - resolution * tot[ci] * ki / two_m
            for c in sorted(links):
                gain = links[c] - resolution * tot[c] * ki / two_m
                # equal gain keeps the current community
                if gain > best_gain + 1e-12:
                    best, best_gain = c, gain
            tot[best] += ki
            if best != ci:
                comm[i] = best
                moved = True
        if not moved:
            return comm, moved_any
        moved_any = True


def louvain(graph: NetworkGraph, resolution: float = 1.0, rng=None) -> Clustering:
    """Two-phase Louvain on the unweighted topology.

    Communities that come out disconnected are split into their connected
    components so every cluster can route internally.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    gen = np.random.default_rng(_seed_from(rng))
    if graph.n_links == 0:
        return Clustering.from_labels(np.zeros(graph.n_nodes, dtype=int))

    adj: list[dict[int, float]] = [{v: 1.0 for v, _ in graph.adj[u]} for u in range(graph.n_nodes)]
    degree = [float(len(a)) for a in graph.adj]
    two_m = 2.0 * graph.n_links
    node_to_super = list(range(graph.n_nodes))

    while True:
        comm, moved = _local_moves(adj, degree, two_m, resolution, gen)
        if not moved:
            break
        relabel: dict[int, int] = {}
        for c in comm:
            relabel.setdefault(c, len(relabel))
        comm = [relabel[c] for c in comm]
        node_to_super = [comm[s] for s in node_to_super]
        n_new = len(relabel)
        new_adj: list[dict[int, float]] = [dict() for _ in range(n_new)]
        new_degree = [0.0] * n_new
        for i, nbrs in enumerate(adj):
            ci = comm[i]
            new_degree[ci] += degree[i]
            for j, w in nbrs.items():
                cj = comm[j]
                if cj != ci:
                    new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
        adj, degree = new_adj, new_degree
        if n_new == 1:
            break

    return Clustering.from_labels(_split_disconnected(graph, np.array(node_to_super)))


def _split_disconnected(graph: NetworkGraph, labels: np.ndarray) -> np.ndarray:
    out = np.full(graph.n_nodes, -1, dtype=np.int64)
    next_label = 0
    for start in range(graph.n_nodes):
        if out[start] >= 0:
            continue
        out[start] = next_label
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v, _ in graph.adj[u]:
                if out[v] < 0 and labels[v] == labels[start]:
                    out[v] = next_label
                    queue.append(v)
        next_label += 1
    return out


def _bfs_order(graph: NetworkGraph, nodes: set[int], start: int) -> list[int]:
    order, seen = [start], {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v, _ in sorted(graph.adj[u]):
            if v in nodes and v not in seen:
                seen.add(v)
                order.append(v)
                queue.append(v)
    return order


def _components(graph: NetworkGraph, nodes: set[int]) -> list[list[int]]:
    comps, left = [], set(nodes)
    while left:
        comp = _bfs_order(graph, left, min(left))
        comps.append(comp)
        left -= set(comp)
    return comps


def _split_largest(graph: NetworkGraph, members: list[list[int]]) -> list[list[int]]:
    idx = max(range(len(members)), key=lambda k: (len(members[k]), -min(members[k])))
    nodes = set(members[idx])
    order = _bfs_order(graph, nodes, min(nodes))
    first = set(order[: len(order) // 2])
    rest = _components(graph, nodes - first)
    rest.sort(key=len, reverse=True)
    # small leftover pieces only touch the first half; fold them into it
    for comp in rest[1:]:
        first.update(comp)
    return members[:idx] + members[idx + 1:] + [sorted(first), sorted(rest[0])]


def _merge_smallest(graph: NetworkGraph, members: list[list[int]]) -> list[list[int]]:
    label = {n: k for k, m in enumerate(members) for n in m}
    by_size = sorted(range(len(members)), key=lambda k: (len(members[k]), min(members[k])))
    for a in by_size:
        adjacent = {label[v] for u in members[a] for v, _ in graph.adj[u]} - {a}
        if adjacent:
            b = min(adjacent, key=lambda k: (len(members[k]), min(members[k])))
            merged = sorted(members[a] + members[b])
            return [m for k, m in enumerate(members) if k not in (a, b)] + [merged]
    raise ValueError("no adjacent clusters to merge")


def _labels_from_members(n: int, members: list[list[int]]) -> np.ndarray:
    labels = np.empty(n, dtype=np.int64)
    for k, m in enumerate(members):
        labels[m] = k
    return labels


def force_cluster_count(graph: NetworkGraph, target_k: int, rng=None,
                        resolution_bounds=(1e-4, 1e4), iterations: int = 40) -> Clustering:
    """Louvain clustering with exactly ``target_k`` clusters.

    Bisects the resolution parameter (more resolution, more clusters). When no
    resolution hits the target, the closest result is repaired by splitting the
    largest cluster or merging the two smallest adjacent ones.
    """
    n = graph.n_nodes
    if not 1 <= target_k <= n:
        raise ValueError(f"target_k must be in [1, {n}], got {target_k}")
    seed = _seed_from(rng)
    if target_k == 1:
        return Clustering.from_labels(np.zeros(n, dtype=int))
    if target_k == n:
        return Clustering.from_labels(np.arange(n))

    lo, hi = math.log(resolution_bounds[0]), math.log(resolution_bounds[1])
    best = None
    tried: dict[float, Clustering] = {}

    def attempt(res):
        if res not in tried:
            tried[res] = louvain(graph, res, seed)
        return tried[res]

    for res in [1.0] + [None] * iterations:
        if res is None:
            res = math.exp(0.5 * (lo + hi))
        c = attempt(res)
        if best is None or abs(c.k - target_k) < abs(best.k - target_k):
            best = c
        if c.k == target_k:
            return c
        if res != 1.0 or lo < 0 < hi:
            if c.k < target_k:
                lo = max(lo, math.log(res))
            else:
                hi = min(hi, math.log(res))

    members = [list(m) for m in best.members]
    while len(members) < target_k:
        members = _split_largest(graph, members)
    while len(members) > target_k:
        members = _merge_smallest(graph, members)
    return Clustering.from_labels(_labels_from_members(n, members))
