"""Acceptance and time per slot on the GEANT-like graph for several cluster counts."""
from sliceplace.clustering import force_cluster_count
from sliceplace.simulation import SimConfig, run_replications
from sliceplace.topology import load_topology

graph = load_topology("geant")
for k in (2, 3, 5, 8):
    sizes = sorted(len(m) for m in force_cluster_count(graph, k, rng=0).members)
    cfg = SimConfig(topology="geant", n_clusters=k, arrival_rate=5.0, chain_lengths=(4,),
                    horizon=500, replications=2, seed=0)
    m = run_replications(cfg).mean
    print(f"K={k}: sizes {sizes}  acceptance {m['acc_ratio']:.3f}  {m['ms_per_slot']:.2f} ms/slot")
