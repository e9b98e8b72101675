"""Thinning/sprinkling couplings and the events built on them.

A unit-intensity Poisson process X is rewritten as the union of an
independent (1 - eps)-thinning of X and an independent intensity-eps
Poisson sprinkle; the union is again unit-intensity Poisson.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError
from .geometry import BoxWindow, PointConfig, RngStream, sample_poisson, superpose, thin
from .scores import ScoreSpec, scores_at
from .stabilization import ConeCover, cone_radii

__all__ = [
    "CouplingSample",
    "couple_eps",
    "couple_M",
    "count_b_dense",
    "event_E_bn",
    "event_E_M_plus",
    "event_A",
    "grid_for_event_A",
    "sample_given_A",
    "telescoping_increase_count",
]


@dataclass(frozen=True, eq=False)
class CouplingSample:
    base: PointConfig
    thinned: PointConfig
    sprinkle: PointConfig
    union: PointConfig
    survival: float
    sprinkle_intensity: float


def couple_eps(base: PointConfig, eps: float, rng: RngStream) -> CouplingSample:
    """Thin ``base`` with survival 1 - eps and add an independent intensity-eps sprinkle."""
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    thinned = thin(base, 1 - eps, rng.child(0))
    sprinkle = sample_poisson(eps, base.window, rng.child(1))
    return CouplingSample(base, thinned, sprinkle, superpose(thinned, sprinkle), 1 - eps, eps)


def couple_M(base: PointConfig, M: float, rng: RngStream) -> CouplingSample:
    """The coupling with eps = M^-d; requires M^-d < 1."""
    if not M >= 1:
        raise ParameterError(f"M must be at least 1, got {M}")
    eps = M ** (-base.dimension)
    if not eps < 1:
        raise ParameterError("M = 1 gives survival probability 0; need M > 1")
    return couple_eps(base, eps, rng)


def count_b_dense(config: PointConfig, scoring_window: BoxWindow, r: float, b: float,
                  shape: str = "cube") -> int:
    """Points in ``scoring_window`` with more than ``b`` points of ``config`` near them.

    "Near" is the closed cube of side ``r`` centred at the point
    (``shape="cube"``) or the closed ball of radius ``r`` (``shape="ball"``);
    the point itself is counted.
    """
    if not r > 0:
        raise ParameterError("r must be positive")
    pts = config.points
    idx = np.flatnonzero(scoring_window.contains(pts))
    if len(idx) == 0:
        return 0
    tree = cKDTree(pts)
    if shape == "cube":
        counts = tree.query_ball_point(pts[idx], r / 2, p=np.inf, return_length=True)
    elif shape == "ball":
        counts = tree.query_ball_point(pts[idx], r, return_length=True)
    else:
        raise ParameterError(f"unknown shape {shape!r}")
    return int(np.count_nonzero(np.asarray(counts) > b))


def event_E_bn(sample: CouplingSample, scoring_window: BoxWindow, r: float, b: float,
               shape: str = "cube") -> bool:
    """No sprinkle point in the window and no b-dense thinned point in it."""
    if np.any(scoring_window.contains(sample.sprinkle.points)):
        return False
    return count_b_dense(sample.thinned, scoring_window, r, b, shape) == 0


def event_E_M_plus(sample: CouplingSample, scoring_window: BoxWindow, M: float,
                   radius_kind="voronoi", cover: ConeCover = None) -> bool:
    """All stabilization radii of base-plus-sprinkle points in the window are at most M.

    ``radius_kind`` is ``"voronoi"`` or ``("knn", k)``.
    """
    if sample.base.dimension != 2:
        raise ParameterError("event_E_M_plus is implemented in d = 2 only")
    k = 1 if radius_kind == "voronoi" else int(radius_kind[1])
    pts = np.unique(np.vstack([sample.base.points, sample.sprinkle.points]), axis=0)
    idx = np.flatnonzero(scoring_window.contains(pts))
    if len(idx) == 0:
        return True
    return bool(np.max(cone_radii(pts, idx, k, cover)) <= M)


def grid_for_event_A(window: BoxWindow, M: float, L: float):
    """Lower corner, cell side and cells per axis of the M/L grid on the doubled window.

    The doubled window is padded outward to a whole number of cells.
    """
    cell = M / L
    side = 2 * window.side
    per_axis = int(np.ceil(side / cell - 1e-9))
    lo = np.asarray(window.center) - per_axis * cell / 2
    return lo, cell, per_axis


def event_A(sprinkle: PointConfig, window: BoxWindow, M: float, L: float) -> bool:
    """Every cell of the M/L grid covering the doubled window holds exactly one point."""
    lo, cell, per_axis = grid_for_event_A(window, M, L)
    pts = sprinkle.points
    rel = (pts - lo) / cell
    inside = np.all((rel >= 0) & (rel < per_axis), axis=1)
    cells = np.floor(rel[inside]).astype(np.int64)
    flat = np.ravel_multi_index(cells.T, (per_axis,) * window.dimension) if len(cells) else np.empty(0, np.int64)
    counts = np.bincount(flat, minlength=per_axis ** window.dimension)
    return bool(np.all(counts == 1))


def sample_given_A(window: BoxWindow, M: float, L: float, rng: RngStream) -> PointConfig:
    """Intensity-M^-d sprinkle conditioned on event A: one uniform point per grid cell."""
    lo, cell, per_axis = grid_for_event_A(window, M, L)
    d = window.dimension
    grid = np.stack(np.meshgrid(*[np.arange(per_axis)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    pts = lo + cell * (grid + rng.generator().random(grid.shape))
    big = BoxWindow(per_axis * cell, d, window.center)
    return PointConfig._trusted(pts, big)


def telescoping_increase_count(spec: ScoreSpec, base: PointConfig, additions,
                               scoring_window: BoxWindow, cover: ConeCover = None) -> list:
    """Per added point, how many base points in the window strictly gain score.

    Points are added one at a time in the given order; the counts bound the
    telescoping increments of the (truncated) functional.
    """
    additions = np.asarray(additions, dtype=float).reshape(-1, base.dimension)
    pts = base.points
    idx = np.flatnonzero(scoring_window.contains(pts))
    prev = scores_at(spec, pts, idx, cover)
    counts = []
    for x in additions:
        pts = np.vstack([pts, x])
        cur = scores_at(spec, pts, idx, cover)
        gained = cur > prev + 1e-12 * np.maximum(np.abs(cur), np.abs(prev))
        counts.append(int(np.count_nonzero(gained)))
        prev = cur
    return counts
