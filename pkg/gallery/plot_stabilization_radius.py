"""
Cone-based stabilization radius
===============================

Twelve cones around a point; the radius is twice the largest nearest
distance over the cones.  Inside that ball the Voronoi cell is decided.
"""
import matplotlib.pyplot as plt
import numpy as np

from lowertail import (BoxWindow, RngStream, cone_cover_2d, parse_spec, sample_poisson,
                       stab_radius_voronoi, verify_stabilization, voronoi_cell)

cfg = sample_poisson(1.0, BoxWindow(12.0), RngStream(5))
center = int(np.argmin(np.linalg.norm(cfg.points, axis=1)))
x = cfg.points[center]
R = stab_radius_voronoi(cfg, center)
print(f"R = {R:.3f}, stabilizes the cell area: {verify_stabilization(parse_spec('voronoi:j=2'), cfg, center, R)}")

# %%
cover = cone_cover_2d()
cell = voronoi_cell(cfg, center, R)
fig, ax = plt.subplots(figsize=(6, 6))
ax.plot(*cfg.points.T, "k.", ms=4)
for axis in cover.axes:
    ax.plot(*np.c_[x, x + R * np.asarray(axis)], color="0.8", lw=0.5)
poly = np.vstack([cell.vertices, cell.vertices[:1]]) + x
ax.plot(*poly.T, "b-")
ax.add_patch(plt.Circle(x, R, fill=False, ls="--"))
ax.set_aspect("equal")
fig.savefig("stabilization_radius.png", dpi=120)
