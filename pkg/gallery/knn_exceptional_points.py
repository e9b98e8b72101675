"""
Which points gain score when one point is added
===============================================

For the k-nearest-neighbour graph with power-weighted edges, adding x can
raise the score of a point y that is *not* among the k nearest neighbours of
x: y picks up x as a neighbour while keeping an edge it owes to another
point that still lists y among its own nearest neighbours.  The
bidirectional graph (edge only when both ends agree) does not show this.
"""
import numpy as np

from lowertail import BoxWindow, PointConfig, check_weakly_decreasing, parse_spec
from lowertail.lemmas import knn_set

cfg = PointConfig(np.array([[0, 0], [1, 0], [2.6, 0.3], [2.6, 0.9]], float), BoxWindow(8.0))
x = (1.95, 0.0)
pts = np.vstack([cfg.points, x])
print("1-NN of x:", knn_set(pts, 4, 1).tolist())

for mode in ("undirected", "bidirectional"):
    exc, ok = check_weakly_decreasing(parse_spec(f"knn:k=1,alpha=0,mode={mode}"), cfg, x)
    print(f"{mode:>13}: points whose score rose {exc.tolist()}  (within bound k=1: {ok})")

# %%
# A sweep shows how often this happens on Poisson samples.
from lowertail import RngStream, run_suite

for r in run_suite(200, RngStream(1), ["weak-decreasing"]):
    print(f"{r.lemma_id:<45} violations={r.violations:>3}  max |Exc|={r.details.get('max_exceptional')}")
