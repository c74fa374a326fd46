"""Run the hierarchical bandit and a random baseline on the 68-node topology."""
from dataclasses import replace

import numpy as np

from sliceplace.simulation import SimConfig, run

cfg = SimConfig(topology="dt2", n_clusters=5, arrival_rate=2.0, chain_lengths=(2,), horizon=1000, seed=0)

for policy in ("helios", "random"):
    trace = run(replace(cfg, policy=policy))
    s = trace.summary()
    print(f"{policy:>7}: acceptance {s['acc_ratio']:.3f}  mean cpu util {s['mean_util_cpu']:.3f}  "
          f"{s['ms_per_slot']:.2f} ms/slot")

# which clusters did the high-level agent pick?
trace = run(cfg)
picked = trace["cluster"][trace["cluster"] >= 0].astype(int)
print("cluster picks:", np.bincount(picked, minlength=trace.n_clusters))
print("final mixed strategy:", np.round(trace.alphas[-1], 3))
