"""
Typical and atypically sparse random geometric graphs
=====================================================

Draw a unit-intensity Poisson sample, connect points closer than 1, and put
it next to a sample conditioned on having only three quarters of the usual
number of edges per unit area.
"""
import math

import matplotlib.pyplot as plt
import numpy as np
from scipy.spatial import cKDTree

from lowertail import RngStream, conditional_sample, parse_spec
from lowertail.tails import sample_h

spec = parse_spec("rgg:alpha=0,t=1")
n, margin = 10.0, 1.0
a = 0.75 * math.pi / 2
rng = RngStream(3)

# %%
# Rejection sampling: attempts grow like one over the tail probability.
h_typ, _, _, typical = sample_h(spec, n, margin, rng.child(0))
cond = conditional_sample(spec, n, a, margin, 100000, rng.child(1))
print(f"typical H_n = {h_typ:.3f}, conditioned H_n = {cond.h_value:.3f} after {cond.attempts} attempts")

# %%
fig, axes = plt.subplots(1, 2, figsize=(10, 5))
for ax, cfg, title in ((axes[0], typical, f"H_n = {h_typ:.3f}"),
                       (axes[1], cond.config, f"H_n = {cond.h_value:.3f} < {a:.3f}")):
    pts = cfg.points
    for i, j in cKDTree(pts).query_pairs(1.0):
        ax.plot(*pts[[i, j]].T, color="0.4", lw=0.6)
    ax.plot(*pts.T, "k.", ms=4)
    ax.set_xlim(-n / 2, n / 2)
    ax.set_ylim(-n / 2, n / 2)
    ax.set_aspect("equal")
    ax.set_title(title)
fig.savefig("typical_vs_conditioned.png", dpi=120)
