"""How the Gini-weighted objective pushes the mixed strategy toward balanced rewards."""
import numpy as np

from sliceplace.scalarization import ggf, ggi_weights, mixture_value, oga_optimize

w = ggi_weights(3)
print("weights:", np.round(w, 3))

# cluster 0 is great on objective 0 only, cluster 1 on objective 1, cluster 2 is mediocre everywhere
est = np.array([[0.9, 0.1, 0.5],
                [0.1, 0.9, 0.5],
                [0.45, 0.45, 0.45]])
for k, row in enumerate(est):
    print(f"cluster {k}: GGF alone = {ggf(row, w):.3f}")

alpha, path = oga_optimize(est, w, steps=50, return_path=True)
print("best mixture:", np.round(alpha, 3), "value", round(mixture_value(alpha, est, w), 3))
print("first ascent steps (not monotone, so the best iterate is kept):", [round(mixture_value(a, est, w), 3) for a in path[:6]])
