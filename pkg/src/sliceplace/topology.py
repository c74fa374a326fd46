"""Capacitated edge-network graph with an allocation ledger.

Nodes carry four resources (cpu, gpu, ram, storage) and links carry a single
bandwidth pool.  Every reservation goes through :meth:`NetworkGraph.allocate`
and is recorded in the ledger until it expires, so ``capacity - available``
can always be recomputed from the live records.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

NODE_RESOURCES = ("cpu", "gpu", "ram", "storage")
N_NODE_RESOURCES = len(NODE_RESOURCES)
TOL = 1e-9

DEFAULT_NODE_CAPACITY = 1000.0
DEFAULT_LINK_CAPACITY = 5000.0

BUILTIN_TOPOLOGIES = ("geant", "dt2")


class TopologyError(ValueError):
    """Malformed topology file or invalid graph structure."""


class InsufficientCapacity(Exception):
    """Raised by :meth:`NetworkGraph.allocate` when a reservation does not fit.

    ``kind`` is ``"node"`` or ``"link"``; ``index`` is the node or link id and
    ``resource`` the offending resource index (always 0 for links).
    """

    def __init__(self, kind: str, index: int, resource: int, requested: float, available: float):
        self.kind = kind
        self.index = index
        self.resource = resource
        self.requested = requested
        self.available = available
        what = NODE_RESOURCES[resource] if kind == "node" else "bandwidth"
        super().__init__(
            f"{kind} {index}: {what} requested {requested:.6g} > available {available:.6g}"
        )


@dataclass
class AllocationRecord:
    request_id: int
    arrival: int
    expiry: int
    node_demand: dict[int, np.ndarray] = field(default_factory=dict)
    link_demand: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.expiry <= self.arrival:
            raise ValueError("expiry slot must be after the arrival slot")
        for n, d in self.node_demand.items():
            d = np.asarray(d, dtype=float)
            if d.shape != (N_NODE_RESOURCES,) or np.any(d <= 0):
                raise ValueError(f"node {n}: reservations must be 4 strictly positive values")
            self.node_demand[n] = d
        for q, bw in self.link_demand.items():
            if not bw > 0:
                raise ValueError(f"link {q}: bandwidth reservation must be positive")

    @property
    def empty(self) -> bool:
        return not self.node_demand and not self.link_demand


class NetworkGraph:
    """Connected undirected graph of edge servers.

    Node ids are ``0..n_nodes-1``; link ids follow the order of ``edges``.
    Capacities default to the top of the usual ranges until
    :func:`randomize_capacities` is called.
    """

    def __init__(self, n_nodes: int, edges, node_capacity=None, link_capacity=None,
                 name: str = "graph"):
        if n_nodes < 1:
            raise TopologyError("graph needs at least one node")
        self.name = name
        self.n_nodes = int(n_nodes)
        self.edges: list[tuple[int, int]] = []
        self.edge_index: dict[tuple[int, int], int] = {}
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise TopologyError(f"edge ({u}, {v}) references an unknown node")
            if u == v:
                raise TopologyError(f"self-loop on node {u}")
            key = (min(u, v), max(u, v))
            if key in self.edge_index:
                raise TopologyError(f"duplicate edge {key}")
            lid = len(self.edges)
            self.edges.append(key)
            self.edge_index[key] = lid
            self.adj[u].append((v, lid))
            self.adj[v].append((u, lid))
        if not self.is_connected():
            raise TopologyError("graph is disconnected")

        # per-element capacity overrides that survive randomization
        self.fixed_node_capacity: dict[int, np.ndarray] = {}
        self.fixed_link_capacity: dict[int, float] = {}

        if node_capacity is None:
            node_capacity = np.full((self.n_nodes, N_NODE_RESOURCES), DEFAULT_NODE_CAPACITY)
        if link_capacity is None:
            link_capacity = np.full(len(self.edges), DEFAULT_LINK_CAPACITY)
        self.node_capacity = np.array(node_capacity, dtype=float).reshape(self.n_nodes, N_NODE_RESOURCES)
        self.link_capacity = np.array(link_capacity, dtype=float).reshape(len(self.edges))
        if np.any(self.node_capacity < 0) or np.any(self.link_capacity < 0):
            raise TopologyError("capacities must be non-negative")
        self.node_available = self.node_capacity.copy()
        self.link_available = self.link_capacity.copy()

        self.ledger: dict[int, AllocationRecord] = {}
        self._expiry_heap: list[tuple[int, int]] = []
        self._node_users = np.zeros(self.n_nodes, dtype=np.int64)
        self._link_users = np.zeros(len(self.edges), dtype=np.int64)

    @property
    def n_links(self) -> int:
        return len(self.edges)

    def __repr__(self):
        return f"NetworkGraph({self.name!r}, nodes={self.n_nodes}, links={self.n_links})"

    def link_between(self, u: int, v: int) -> int:
        return self.edge_index[(min(u, v), max(u, v))]

    def neighbors(self, u: int) -> list[int]:
        return [v for v, _ in self.adj[u]]

    def is_connected(self, nodes=None) -> bool:
        """Connectivity of the whole graph, or of the subgraph induced by ``nodes``."""
        allowed = set(range(self.n_nodes)) if nodes is None else set(nodes)
        if not allowed:
            return False
        start = next(iter(allowed))
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v, _ in self.adj[u]:
                if v in allowed and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == len(allowed)

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n_nodes))
        for lid, (u, v) in enumerate(self.edges):
            g.add_edge(u, v, id=lid, bandwidth=float(self.link_available[lid]))
        return g

    def reset(self):
        """Drop every live allocation and restore full availability."""
        self.node_available = self.node_capacity.copy()
        self.link_available = self.link_capacity.copy()
        self.ledger.clear()
        self._expiry_heap.clear()
        self._node_users[:] = 0
        self._link_users[:] = 0

    # -- allocation ---------------------------------------------------------

    def fits(self, record: AllocationRecord) -> InsufficientCapacity | None:
        for n, d in record.node_demand.items():
            avail = self.node_available[n]
            for j in range(N_NODE_RESOURCES):
                if d[j] > avail[j] + TOL:
                    return InsufficientCapacity("node", n, j, float(d[j]), float(avail[j]))
        for q, bw in record.link_demand.items():
            if bw > self.link_available[q] + TOL:
                return InsufficientCapacity("link", q, 0, float(bw), float(self.link_available[q]))
        return None

    def allocate(self, record: AllocationRecord) -> None:
        """Reserve everything in ``record`` or nothing at all."""
        if record.request_id in self.ledger:
            raise ValueError(f"request {record.request_id} already holds an allocation")
        problem = self.fits(record)
        if problem is not None:
            raise problem
        if record.empty:
            return
        for n, d in record.node_demand.items():
            self.node_available[n] = np.maximum(self.node_available[n] - d, 0.0)
            self._node_users[n] += 1
        for q, bw in record.link_demand.items():
            self.link_available[q] = max(self.link_available[q] - bw, 0.0)
            self._link_users[q] += 1
        self.ledger[record.request_id] = record
        heapq.heappush(self._expiry_heap, (record.expiry, record.request_id))

    def release(self, request_id: int) -> AllocationRecord:
        record = self.ledger.pop(request_id)
        for n, d in record.node_demand.items():
            self._node_users[n] -= 1
            if self._node_users[n] == 0:
                # no live reservations left: restore exactly, no float drift
                self.node_available[n] = self.node_capacity[n]
            else:
                self.node_available[n] = np.minimum(self.node_available[n] + d, self.node_capacity[n])
        for q, bw in record.link_demand.items():
            self._link_users[q] -= 1
            if self._link_users[q] == 0:
                self.link_available[q] = self.link_capacity[q]
            else:
                self.link_available[q] = min(self.link_available[q] + bw, self.link_capacity[q])
        return record

    def release_expired(self, t: int) -> int:
        """Release every record whose expiry slot is ``<= t``."""
        count = 0
        heap = self._expiry_heap
        while heap and heap[0][0] <= t:
            _, rid = heapq.heappop(heap)
            if rid in self.ledger:
                self.release(rid)
                count += 1
        return count

    # -- views --------------------------------------------------------------

    def node_utilization(self) -> np.ndarray:
        """(capacity - available) / capacity per node and resource; 0 where capacity is 0."""
        cap = self.node_capacity
        used = cap - self.node_available
        return np.divide(used, cap, out=np.zeros_like(used), where=cap > 0)

    def link_utilization(self) -> np.ndarray:
        cap = self.link_capacity
        used = cap - self.link_available
        return np.divide(used, cap, out=np.zeros_like(used), where=cap > 0)

    def ledger_usage(self) -> tuple[np.ndarray, np.ndarray]:
        node_used = np.zeros_like(self.node_capacity)
        link_used = np.zeros_like(self.link_capacity)
        for record in self.ledger.values():
            for n, d in record.node_demand.items():
                node_used[n] += d
            for q, bw in record.link_demand.items():
                link_used[q] += bw
        return node_used, link_used

    def check_invariants(self, tol: float = TOL) -> None:
        """Assert availability bounds and ledger conservation."""
        if np.any(self.node_available < -tol) or np.any(self.link_available < -tol):
            raise AssertionError("negative availability")
        if np.any(self.node_available > self.node_capacity + tol):
            raise AssertionError("node availability exceeds capacity")
        if np.any(self.link_available > self.link_capacity + tol):
            raise AssertionError("link availability exceeds capacity")
        node_used, link_used = self.ledger_usage()
        node_gap = np.abs(self.node_capacity - self.node_available - node_used)
        link_gap = np.abs(self.link_capacity - self.link_available - link_used)
        if node_gap.size and node_gap.max() > tol * max(1.0, self.node_capacity.max()):
            raise AssertionError(f"node conservation violated by {node_gap.max():.3g}")
        if link_gap.size and link_gap.max() > tol * max(1.0, self.link_capacity.max()):
            raise AssertionError(f"link conservation violated by {link_gap.max():.3g}")


def randomize_capacities(graph: NetworkGraph, node_range=(5.0, 1000.0), link_range=(500.0, 5000.0),
                         rng=None) -> NetworkGraph:
    """Draw every node resource and link bandwidth uniformly from the given ranges.

    Capacity overrides read from the topology file are re-applied afterwards.
    The graph must not hold live allocations.
    """
    for lo, hi in (node_range, link_range):
        if not (0 <= lo <= hi) or not np.isfinite(hi):
            raise ValueError(f"invalid capacity range [{lo}, {hi}]")
    if graph.ledger:
        raise ValueError("cannot randomize capacities while allocations are live")
    rng = np.random.default_rng(rng)
    graph.node_capacity = rng.uniform(node_range[0], node_range[1], (graph.n_nodes, N_NODE_RESOURCES))
    graph.link_capacity = rng.uniform(link_range[0], link_range[1], graph.n_links)
    for n, cap in graph.fixed_node_capacity.items():
        graph.node_capacity[n] = cap
    for q, cap in graph.fixed_link_capacity.items():
        graph.link_capacity[q] = cap
    graph.reset()
    return graph


def _parse_number(tok: str, lineno: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise TopologyError(f"line {lineno}: expected a number, got {tok!r}") from None
    if not np.isfinite(value) or value < 0:
        raise TopologyError(f"line {lineno}: capacity must be finite and non-negative")
    return value


def _parse_int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise TopologyError(f"line {lineno}: expected an integer, got {tok!r}") from None


def parse_topology(text: str, name: str = "graph") -> NetworkGraph:
    """Parse the edge-list format.

    ::

        nodes 4
        0 1
        1 2
        # optional capacity overrides
        node 0 100 100 100 100
        link 0 1 2500
    """
    n_nodes = None
    edges: list[tuple[int, int]] = []
    node_caps: dict[int, list[float]] = {}
    link_caps: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0].lower()
        if n_nodes is None:
            if head != "nodes" or len(toks) != 2:
                raise TopologyError(f"line {lineno}: expected header 'nodes <count>'")
            n_nodes = _parse_int(toks[1], lineno)
            if n_nodes < 1:
                raise TopologyError(f"line {lineno}: node count must be positive")
        elif head == "cap" and len(toks) == 1:
            continue
        elif head == "node":
            if len(toks) != 2 + N_NODE_RESOURCES:
                raise TopologyError(f"line {lineno}: expected 'node <id> cpu gpu ram storage'")
            nid = _parse_int(toks[1], lineno)
            if not 0 <= nid < n_nodes:
                raise TopologyError(f"line {lineno}: unknown node {nid}")
            node_caps[nid] = [_parse_number(t, lineno) for t in toks[2:]]
        elif head == "link":
            if len(toks) != 4:
                raise TopologyError(f"line {lineno}: expected 'link <u> <v> bandwidth'")
            u, v = _parse_int(toks[1], lineno), _parse_int(toks[2], lineno)
            link_caps[(min(u, v), max(u, v))] = _parse_number(toks[3], lineno)
        elif len(toks) == 2:
            edges.append((_parse_int(toks[0], lineno), _parse_int(toks[1], lineno)))
        else:
            raise TopologyError(f"line {lineno}: cannot parse {raw.strip()!r}")
    if n_nodes is None:
        raise TopologyError("missing 'nodes <count>' header")

    graph = NetworkGraph(n_nodes, edges, name=name)
    for nid, caps in node_caps.items():
        graph.fixed_node_capacity[nid] = np.array(caps)
        graph.node_capacity[nid] = caps
    for key, bw in link_caps.items():
        if key not in graph.edge_index:
            raise TopologyError(f"capacity given for missing link {key}")
        lid = graph.edge_index[key]
        graph.fixed_link_capacity[lid] = bw
        graph.link_capacity[lid] = bw
    graph.reset()
    return graph


def load_topology(source) -> NetworkGraph:
    """Load a graph from an edge-list file or a built-in name (``geant``, ``dt2``)."""
    if isinstance(source, str) and source.lower() in BUILTIN_TOPOLOGIES:
        name = source.lower()
        text = resources.files("sliceplace.data").joinpath(f"{name}.edges").read_text()
        return parse_topology(text, name=name)
    path = Path(source)
    return parse_topology(path.read_text(), name=path.stem)


def format_topology(graph: NetworkGraph, with_capacities: bool = False, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"nodes {graph.n_nodes}")
    lines.extend(f"{u} {v}" for u, v in graph.edges)
    if with_capacities:
        lines.append("cap")
        for n in range(graph.n_nodes):
            lines.append("node {} {}".format(n, " ".join(repr(float(c)) for c in graph.node_capacity[n])))
        for lid, (u, v) in enumerate(graph.edges):
            lines.append(f"link {u} {v} {float(graph.link_capacity[lid])!r}")
    return "\n".join(lines) + "\n"


def community_graph(sizes, n_links: int, inter_fraction: float = 0.2, rng=None) -> NetworkGraph:
    """Random connected graph with planted communities and exactly ``n_links`` links.

    Each community gets a spanning ring, communities are chained by one link
    each, and the remaining links are split between intra- and
    inter-community pairs according to ``inter_fraction``.
    """
    rng = np.random.default_rng(rng)
    sizes = [int(s) for s in sizes]
    n = sum(sizes)
    groups, start = [], 0
    for s in sizes:
        groups.append(list(range(start, start + s)))
        start += s
    member = np.empty(n, dtype=int)
    for g, nodes in enumerate(groups):
        member[nodes] = g

    chosen: set[tuple[int, int]] = set()

    def add(u, v):
        if u != v:
            chosen.add((min(u, v), max(u, v)))

    for nodes in groups:
        if len(nodes) == 2:
            add(nodes[0], nodes[1])
        elif len(nodes) > 2:
            for i in range(len(nodes)):
                add(nodes[i], nodes[(i + 1) % len(nodes)])
    for a, b in zip(groups, groups[1:]):
        add(int(rng.choice(a)), int(rng.choice(b)))

    intra = [(u, v) for u in range(n) for v in range(u + 1, n) if member[u] == member[v] and (u, v) not in chosen]
    inter = [(u, v) for u in range(n) for v in range(u + 1, n) if member[u] != member[v] and (u, v) not in chosen]
    remaining = n_links - len(chosen)
    if remaining < 0 or remaining > len(intra) + len(inter):
        raise ValueError(f"cannot build {n_links} links on {n} nodes with these communities")
    n_inter = min(len(inter), int(round(remaining * inter_fraction)))
    n_intra = remaining - n_inter
    if n_intra > len(intra):
        n_inter += n_intra - len(intra)
        n_intra = len(intra)
    for idx in rng.choice(len(intra), n_intra, replace=False):
        chosen.add(intra[idx])
    for idx in rng.choice(len(inter), n_inter, replace=False):
        chosen.add(inter[idx])
    return NetworkGraph(n, sorted(chosen), name="community")
