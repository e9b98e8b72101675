"""Cone covers and stabilization radii in the plane.

The radius of a point is twice the largest, over a family of extended cones
with apex at the point, of the distance to the k-th closest other point in
that cone (k = 1 for Voronoi cells and relative neighbourhood edges).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError
from .geometry import PointConfig, point_index

__all__ = [
    "ConeCover",
    "cone_cover_2d",
    "cone_radii",
    "stab_radius_voronoi",
    "stab_radius_knn",
    "verify_stabilization",
]


@dataclass(frozen=True, eq=False)
class ConeCover:
    """Axes of planar cones; core cones have half-angle ``core_half_angle``."""

    axes: np.ndarray
    core_half_angle: float = np.pi / 12
    extended_half_angle: float = np.pi / 6

    @property
    def count(self) -> int:
        return len(self.axes)

    def covers_circle(self, n_probe: int = 100_000) -> bool:
        theta = np.linspace(0, 2 * np.pi, n_probe, endpoint=False)
        u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        cosang = np.max(u @ self.axes.T, axis=1)
        return bool(np.all(cosang >= np.cos(self.core_half_angle) - 1e-12))


def cone_cover_2d(count: int = 12) -> ConeCover:
    """Canonical cover: ``count`` axes at angles 2*pi*j/count, first along +x."""
    if count < 12:
        raise ParameterError("at least 12 cones of half-angle pi/12 are needed to cover the plane")
    theta = 2 * np.pi * np.arange(count) / count
    return ConeCover(np.stack([np.cos(theta), np.sin(theta)], axis=1))


def cone_radii(points: np.ndarray, indices, k: int = 1, cover: ConeCover = None,
               tree: cKDTree = None) -> np.ndarray:
    """Stabilization radius ``2 * max_cone (k-th distance in the extended cone)``.

    Vectorised over ``indices``; cones are closed.  Returns ``inf`` where some
    extended cone holds fewer than ``k`` other points.
    """
    if k < 1:
        raise ParameterError("k must be a positive integer")
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ParameterError("cone stabilization radii are implemented in d = 2 only")
    cover = cone_cover_2d() if cover is None else cover
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    n = len(points)
    out = np.full(len(indices), np.inf)
    if n <= k or len(indices) == 0:
        return out
    tree = cKDTree(points) if tree is None else tree
    cos_ext = np.cos(cover.extended_half_angle)
    todo = np.arange(len(indices))
    m = min(n - 1, max(24, 12 * k + 12))
    while len(todo):
        ctr = indices[todo]
        _, nb = tree.query(points[ctr], k=m + 1)
        nb = nb.reshape(len(ctr), m + 1)
        # drop the centre itself wherever it appears
        not_self = nb != ctr[:, None]
        nb = np.where(not_self, nb, n)
        valid = nb < n
        padded = np.vstack([points, np.full((1, 2), np.nan)])
        vec = padded[nb] - points[ctr][:, None, :]
        dist = np.sqrt(np.sum(vec * vec, axis=-1))
        proj = vec @ cover.axes.T
        inside = valid[..., None] & (proj >= dist[..., None] * cos_ext - 1e-12 * dist[..., None])
        # neighbours are distance-sorted, so the k-th hit per cone is the k-th distance
        # the masked centre has distance 0, so tree order is normally kept
        dsort = np.where(valid, dist, 0.0)
        if np.any(np.diff(dsort, axis=1) < 0):
            order = np.argsort(dsort, axis=1, kind="stable")
            inside = np.take_along_axis(inside, order[..., None], axis=1)
            dsort = np.take_along_axis(dsort, order, axis=1)
        csum = np.cumsum(inside, axis=1, dtype=np.int16)
        reached = csum[:, -1, :] >= k
        first = np.argmax(csum >= k, axis=1)
        kth = np.take_along_axis(dsort, first, axis=1)
        complete = np.all(reached, axis=1)
        out[todo[complete]] = 2 * np.max(kth[complete], axis=1)
        if m >= n - 1:
            break
        todo = todo[~complete]
        # centres still open usually sit near the boundary with an empty cone
        m = n - 1
    return out


def stab_radius_voronoi(config: PointConfig, center, cover: ConeCover = None) -> float:
    """Twice the radius at which ``center`` has a neighbour in every extended cone."""
    i = point_index(config, center)
    return float(cone_radii(config.points, [i], 1, cover)[0])


def stab_radius_knn(config: PointConfig, center, cover: ConeCover = None, k: int = 1) -> float:
    """As :func:`stab_radius_voronoi` but with the k-th closest point of each cone."""
    i = point_index(config, center)
    return float(cone_radii(config.points, [i], k, cover)[0])


def verify_stabilization(spec, config: PointConfig, center, radius: float) -> bool:
    """Whether the score at ``center`` is unchanged by deleting points outside B_radius.

    Combinatorial scores (clique counts, zero-power edge sums, v0) must agree
    exactly; real-valued ones to relative tolerance 1e-12.
    """
    from .scores import evaluate_score, is_combinatorial

    if not np.isfinite(radius):
        raise ParameterError("radius must be finite")
    i = point_index(config, center)
    pts = config.points
    d = np.sqrt(np.sum((pts - pts[i]) ** 2, axis=1))
    keep = d <= radius
    local = PointConfig._trusted(pts[keep], config.window)
    j = int(np.sum(keep[:i]))
    full = evaluate_score(spec, config, i)
    part = evaluate_score(spec, local, j)
    if is_combinatorial(spec):
        return bool(full == part)
    return bool(abs(full - part) <= 1e-12 * max(abs(full), abs(part)))
