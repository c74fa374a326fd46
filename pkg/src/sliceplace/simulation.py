"""Discrete-time slot loop, metric collection and replication control."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .clustering import Clustering, force_cluster_count, louvain
from .embedding import Rejection, compute_rewards, try_embed
from .policies import POLICY_NAMES, HierarchicalPolicy, make_policy
from .scalarization import ggf, ggi_weights, oga_optimize
from .topology import NetworkGraph, load_topology, randomize_capacities
from .workload import RequestGenerator, TraceReplay, WorkloadConfig, read_trace

# reference cluster counts for the bundled topologies
DEFAULT_CLUSTERS = {"geant": 3, "dt2": 5}

METRIC_COLUMNS = ("slot", "arrivals", "accepted", "acc_ratio", "util_cpu", "util_gpu", "util_ram",
                  "util_storage", "util_bw", "cluster", "ggf_reward", "regret_est", "elapsed_ms")


@dataclass
class SimConfig:
    topology: str = "geant"
    policy: str = "helios"
    n_clusters: int | None = None
    resolution: float = 1.0
    arrival_rate: float = 2.0
    max_lifetime: int = 50
    min_lifetime: int = 10
    chain_lengths: tuple[int, ...] = (2, 3, 4)
    vnf_demand: tuple[float, float] = (5.0, 50.0)
    vlink_demand: tuple[float, float] = (50.0, 100.0)
    node_capacity: tuple[float, float] = (5.0, 1000.0)
    link_capacity: tuple[float, float] = (500.0, 5000.0)
    horizon: int = 5000
    steps: int = 10
    gamma: float = 0.1
    weight_ratio: float = 2.0
    epsilon: float = 0.5
    beta: float = 1.0
    cts_v: float = 0.25
    cts_gamma: float = 1.0
    per_request_cluster: bool = False
    seed: int = 0
    replications: int = 1
    drain: bool = False
    check_invariants: bool = False
    trace: str | None = None

    def __post_init__(self):
        self.chain_lengths = tuple(int(c) for c in self.chain_lengths)
        if self.horizon < 1:
            raise ValueError("horizon must be at least one slot")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.arrival_rate <= 0:
            raise ValueError("arrival rate must be positive")
        if self.policy not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.n_clusters is not None and self.n_clusters < 1:
            raise ValueError("cluster count must be positive")
        if self.steps < 1 or self.gamma <= 0:
            raise ValueError("need steps >= 1 and gamma > 0")
        for lo, hi in (self.node_capacity, self.link_capacity):
            if not 0 <= lo <= hi:
                raise ValueError(f"invalid capacity range [{lo}, {hi}]")
        self.workload()  # validates demand and lifetime ranges

    def workload(self) -> WorkloadConfig:
        return WorkloadConfig(self.arrival_rate, self.chain_lengths, self.vnf_demand,
                              self.vlink_demand, self.min_lifetime, self.max_lifetime)

    def weights(self) -> np.ndarray:
        return ggi_weights(6, self.weight_ratio)


@dataclass
class MetricsTrace:
    columns: dict[str, np.ndarray]
    policy: str
    n_clusters: int
    alphas: np.ndarray | None = None
    rewards: np.ndarray | None = None
    weights: np.ndarray | None = None
    drained_clean: bool | None = None
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.columns["slot"])

    def __getitem__(self, name):
        return self.columns[name]

    def final(self) -> dict[str, float]:
        return {c: float(self.columns[c][-1]) for c in METRIC_COLUMNS}

    def summary(self) -> dict[str, float]:
        """Final-row metrics plus slot averages of utilization and regret, and time per slot."""
        out = self.final()
        for c in ("util_cpu", "util_gpu", "util_ram", "util_storage", "util_bw"):
            out[f"mean_{c}"] = float(np.mean(self.columns[c]))
        # empty slots carry no regret estimate
        regret = self.columns["regret_est"]
        regret = regret[~np.isnan(regret)]
        out["regret_est"] = float(regret.mean()) if regret.size else float("nan")
        out["ms_per_slot"] = out["elapsed_ms"] / len(self)
        return out

    def to_csv(self, timing: bool = False) -> str:
        """Metric rows in the fixed column order.

        Wall-clock values differ between identical runs, so ``elapsed_ms`` is
        left empty unless ``timing`` is set; see :meth:`timing_csv`.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(METRIC_COLUMNS)
        cols = self.columns
        for i in range(len(self)):
            row = []
            for c in METRIC_COLUMNS:
                v = cols[c][i]
                if c in ("slot", "arrivals", "accepted", "cluster"):
                    row.append(int(v))
                elif c == "elapsed_ms" and not timing:
                    row.append("")
                elif np.isnan(v):
                    row.append("")
                else:
                    row.append(repr(float(v)))
            w.writerow(row)
        return buf.getvalue()

    def timing_csv(self) -> str:
        rows = ["slot,elapsed_ms"]
        rows.extend(f"{int(s)},{e:.3f}" for s, e in zip(self.columns["slot"], self.columns["elapsed_ms"]))
        return "\n".join(rows) + "\n"


def average_node_utilization(graph: NetworkGraph) -> np.ndarray:
    """Mean over nodes of used/capacity, one value per node resource."""
    return graph.node_utilization().mean(axis=0)


def estimated_regret(trace: MetricsTrace, steps: int = 200) -> float:
    """Hindsight regret of the played mixed strategies.

    The comparator is the fixed distribution maximizing the GGF of the
    time-averaged reward matrix (found by gradient ascent from uniform).
    """
    if trace.alphas is None or len(trace.alphas) == 0:
        raise ValueError("trace carries no mixed-strategy history")
    return _regret(trace.alphas, trace.rewards, trace.weights, steps)


def _regret(alphas, rewards, weights, steps=200) -> float:
    mean_mu = rewards.mean(axis=0)
    best = oga_optimize(mean_mu, weights, None, steps)
    played = np.einsum("tk,tko->o", alphas, rewards) / len(alphas)
    return ggf(best @ mean_mu, weights) - ggf(played, weights)


def _seeds(config: SimConfig, replication: int):
    ss = np.random.SeedSequence([config.seed, replication])
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def request_generator(config: SimConfig, replication: int = 0) -> RequestGenerator:
    """The request stream that :func:`run` draws for this replication."""
    return RequestGenerator(config.workload(), _seeds(config, replication)[2])


def build_clustering(graph: NetworkGraph, config: SimConfig, rng) -> Clustering:
    k = config.n_clusters
    if k is None:
        k = DEFAULT_CLUSTERS.get(graph.name)
    if k is None:
        return louvain(graph, config.resolution, rng)
    return force_cluster_count(graph, min(k, graph.n_nodes), rng)


def run(config: SimConfig, replication: int = 0, graph: NetworkGraph | None = None,
        requests=None) -> MetricsTrace:
    """Simulate ``config.horizon`` slots and return the per-slot metrics."""
    cap_rng, clu_rng, work_rng, pol_rng = _seeds(config, replication)
    if graph is None:
        graph = load_topology(config.topology)
    randomize_capacities(graph, config.node_capacity, config.link_capacity, cap_rng)

    clustering = build_clustering(graph, config, clu_rng) if config.policy == "helios" else None
    policy = make_policy(
        config.policy, graph, clustering, rng=pol_rng, gamma=config.gamma, steps=config.steps,
        weights=config.weights(), epsilon=config.epsilon, beta=config.beta, cts_v=config.cts_v,
        cts_gamma=config.cts_gamma, vnf_max=config.vnf_demand[1], vlink_max=config.vlink_demand[1],
        chain_max=max(config.chain_lengths), per_request=config.per_request_cluster)
    if requests is None and config.trace:
        requests = read_trace(config.trace)
    source = TraceReplay(requests) if requests is not None else RequestGenerator(config.workload(), work_rng)

    T = config.horizon
    weights = config.weights()
    cols = {c: np.zeros(T) for c in METRIC_COLUMNS}
    hierarchical = isinstance(policy, HierarchicalPolicy)
    k_total = clustering.k if clustering is not None else 0
    alphas, rewards = [], []
    mu_sum = np.zeros((k_total, 6))
    played_sum = np.zeros(6)
    best_alpha = None

    arrived = accepted = 0
    elapsed = 0.0
    for t in range(1, T + 1):
        tic = time.perf_counter()
        graph.release_expired(t)
        batch = source.arrivals_for_slot(t)
        policy.begin_slot(t, graph, batch)
        slot_accepted = 0
        for request in batch:
            nodes = policy.place(request, graph)
            try:
                embedding = try_embed(graph, request, nodes)
                slot_accepted += 1
            except Rejection:
                embedding = None
            policy.observe(request, nodes, compute_rewards(graph, nodes, embedding))
        policy.end_slot(t)

        arrived += len(batch)
        accepted += slot_accepted
        i = t - 1
        regret = np.nan
        reward = np.nan
        cluster = -1
        if hierarchical and batch:
            cluster = policy.cluster
            r = policy.last_reward
            reward = ggf(r, weights)
            if not config.per_request_cluster:
                mu = policy.estimates.copy()
                mu[cluster] = r
                alphas.append(policy.hla.alpha.copy())
                rewards.append(mu)
                mu_sum += mu
                played_sum += policy.hla.alpha @ mu
                n = len(alphas)
                best_alpha = oga_optimize(mu_sum / n, weights, best_alpha, config.steps)
                regret = ggf(best_alpha @ (mu_sum / n), weights) - ggf(played_sum / n, weights)
        util = average_node_utilization(graph)
        cols["slot"][i] = t
        cols["arrivals"][i] = len(batch)
        cols["accepted"][i] = slot_accepted
        cols["acc_ratio"][i] = accepted / arrived if arrived else 1.0
        cols["util_cpu"][i], cols["util_gpu"][i], cols["util_ram"][i], cols["util_storage"][i] = util
        cols["util_bw"][i] = float(graph.link_utilization().mean()) if graph.n_links else 0.0
        cols["cluster"][i] = cluster
        cols["ggf_reward"][i] = reward
        cols["regret_est"][i] = regret
        if config.check_invariants:
            graph.check_invariants()
        elapsed += time.perf_counter() - tic
        cols["elapsed_ms"][i] = elapsed * 1e3

    trace = MetricsTrace(cols, config.policy, k_total, weights=weights)
    if alphas:
        trace.alphas = np.array(alphas)
        trace.rewards = np.array(rewards)
    if config.drain:
        for t in range(T + 1, T + config.max_lifetime + 2):
            graph.release_expired(t)
        graph.check_invariants()
        trace.drained_clean = (not graph.ledger
                               and np.array_equal(graph.node_available, graph.node_capacity)
                               and np.array_equal(graph.link_available, graph.link_capacity))
    trace.info = {"topology": graph.name, "nodes": graph.n_nodes, "links": graph.n_links,
                  "replication": replication, "seed": config.seed,
                  "cluster_sizes": [len(m) for m in clustering.members] if clustering else []}
    return trace


SUMMARY_KEYS = ("acc_ratio", "mean_util_cpu", "mean_util_gpu", "mean_util_ram", "mean_util_storage",
                "mean_util_bw", "util_cpu", "regret_est", "ms_per_slot")


@dataclass
class ReplicationSummary:
    per_run: list[dict[str, float]]
    mean: dict[str, float]
    std: dict[str, float]
    traces: list[MetricsTrace] = field(default_factory=list, repr=False)

    def to_csv(self) -> str:
        keys = list(SUMMARY_KEYS)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replication"] + keys)
        for r, row in enumerate(self.per_run):
            w.writerow([r] + [_fmt(row[k]) for k in keys])
        w.writerow(["mean"] + [_fmt(self.mean[k]) for k in keys])
        w.writerow(["std"] + [_fmt(self.std[k]) for k in keys])
        return buf.getvalue()


def _fmt(v) -> str:
    return "" if v is None or np.isnan(v) else repr(float(v))


def aggregate(per_run: list[dict[str, float]]) -> tuple[dict[str, float], dict[str, float]]:
    mean, std = {}, {}
    for key in per_run[0]:
        vals = np.array([row[key] for row in per_run], dtype=float)
        if np.all(np.isnan(vals)):
            mean[key] = std[key] = float("nan")
            continue
        vals = vals[~np.isnan(vals)]
        mean[key] = float(vals.mean())
        std[key] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
    return mean, std


def run_replications(config: SimConfig, keep_traces: bool = False, requests=None) -> ReplicationSummary:
    """Independent replications (fresh capacities, workload and policy seeds) and their mean/std."""
    if requests is None and config.trace:
        requests = read_trace(config.trace)
    per_run, traces = [], []
    for r in range(config.replications):
        trace = run(config, replication=r, requests=requests)
        per_run.append(trace.summary())
        if keep_traces:
            traces.append(trace)
    mean, std = aggregate(per_run)
    return ReplicationSummary(per_run, mean, std, traces)


def with_overrides(config: SimConfig, **changes) -> SimConfig:
    return replace(config, **changes)


def config_field_names() -> list[str]:
    return [f.name for f in fields(SimConfig)]


def write_outputs(trace: MetricsTrace, out_dir, stem: str = "metrics") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.csv"
    path.write_text(trace.to_csv())
    (out / f"{stem}.timing.csv").write_text(trace.timing_csv())
    return path
