"""Online network-slice placement with a two-level hierarchical bandit."""

from .clustering import Clustering, force_cluster_count, louvain, modularity
from .embedding import Embedding, Rejection, compute_rewards, try_embed
from .policies import POLICY_NAMES, make_policy
from .scalarization import ggf, ggf_subgradient, ggi_weights, oga_optimize, project_to_simplex
from .simulation import MetricsTrace, SimConfig, estimated_regret, run, run_replications
from .topology import AllocationRecord, InsufficientCapacity, NetworkGraph, load_topology, randomize_capacities
from .workload import RequestGenerator, SliceRequest, WorkloadConfig

__version__ = "0.1.0"
