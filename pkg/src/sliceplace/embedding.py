"""Turning a chosen node set into a committed SFC embedding."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .cluster_agent import N_OBJECTIVES
from .topology import TOL, AllocationRecord, InsufficientCapacity, NetworkGraph
from .workload import SliceRequest

REJECTION_REASONS = ("node_capacity", "link_capacity", "no_feasible_path")


class Rejection(Exception):
    def __init__(self, reason: str, detail: str = ""):
        if reason not in REJECTION_REASONS:
            raise ValueError(f"unknown rejection reason {reason!r}")
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass
class Embedding:
    request_id: int
    assignment: list[int]
    paths: list[list[int]]
    record: AllocationRecord

    @property
    def used_links(self) -> list[int]:
        return sorted(self.record.link_demand)


def shortest_path(graph: NetworkGraph, src: int, dst: int, min_bandwidth: float = 0.0,
                  pending=None) -> list[int] | None:
    """Minimum-hop path from ``src`` to ``dst`` as a list of link ids.

    Only links whose available bandwidth, minus what ``pending`` already
    earmarks, covers ``min_bandwidth`` are usable.  With unit link weights,
    Dijkstra reduces to breadth-first search.  Returns ``None`` if no such
    path exists.
    """
    if src == dst:
        return []
    avail = graph.link_available
    pending = pending or {}
    parent: dict[int, tuple[int, int]] = {src: (-1, -1)}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v, lid in graph.adj[u]:
            if v in parent:
                continue
            if avail[lid] - pending.get(lid, 0.0) + TOL < min_bandwidth:
                continue
            parent[v] = (u, lid)
            if v == dst:
                path = []
                while v != src:
                    v, lid = parent[v]
                    path.append(lid)
                return path[::-1]
            queue.append(v)
    return None


def try_embed(graph: NetworkGraph, request: SliceRequest, super_arm) -> Embedding:
    """Place VNF ``d`` on ``super_arm[d % len(super_arm)]`` and route the virtual links.

    Commits atomically; raises :class:`Rejection` with the graph untouched
    when a node or link constraint cannot be met.
    """
    arms = [int(n) for n in super_arm]
    if not arms:
        raise ValueError("empty super arm")
    assignment = [arms[d % len(arms)] for d in range(request.length)]

    node_demand: dict[int, np.ndarray] = {}
    for d, n in enumerate(assignment):
        if n in node_demand:
            node_demand[n] = node_demand[n] + request.vnf_demand[d]
        else:
            node_demand[n] = request.vnf_demand[d].copy()
    for n, dem in node_demand.items():
        if np.any(dem > graph.node_available[n] + TOL):
            raise Rejection("node_capacity", f"node {n}")

    pending: dict[int, float] = {}
    paths = []
    for e, (a, b) in enumerate(request.virtual_links):
        bw = float(request.link_demand[e])
        path = shortest_path(graph, assignment[a], assignment[b], bw, pending)
        if path is None:
            raise Rejection("no_feasible_path", f"virtual link {e}")
        for lid in path:
            pending[lid] = pending.get(lid, 0.0) + bw
        paths.append(path)

    record = AllocationRecord(request.id, request.arrival, request.expiry, node_demand, pending)
    try:
        graph.allocate(record)
    except InsufficientCapacity as exc:
        raise Rejection("node_capacity" if exc.kind == "node" else "link_capacity", str(exc)) from exc
    return Embedding(request.id, assignment, paths, record)


def compute_rewards(graph: NetworkGraph, super_arm, embedding: Embedding | None) -> np.ndarray:
    """Per-node reward vectors, one row per super-arm node.

    Columns: acceptance, then ``1 - utilization`` of cpu, gpu, ram and storage
    on that node, then ``1 -`` mean utilization of the physical links carrying
    the request (1 if none are used).  A rejected request earns all zeros.
    """
    arms = [int(n) for n in super_arm]
    out = np.zeros((len(arms), N_OBJECTIVES))
    if embedding is None:
        return out
    cap = graph.node_capacity[arms]
    used = cap - graph.node_available[arms]
    util = np.divide(used, cap, out=np.zeros_like(used), where=cap > 0)
    links = embedding.used_links
    if links:
        lcap = graph.link_capacity[links]
        lused = lcap - graph.link_available[links]
        bw_util = float(np.mean(np.divide(lused, lcap, out=np.zeros_like(lused), where=lcap > 0)))
    else:
        bw_util = 0.0
    out[:, 0] = 1.0
    out[:, 1:1 + util.shape[1]] = np.clip(1.0 - util, 0.0, 1.0)
    out[:, -1] = min(max(1.0 - bw_util, 0.0), 1.0)
    return out
