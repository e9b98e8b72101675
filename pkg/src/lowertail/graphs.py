"""Proximity structures on point configurations.

k-nearest-neighbour radii and graphs, the relative neighbourhood graph,
clique counts of the geometric graph and planar Voronoi cells.  Neighbour
search is delegated to :class:`scipy.spatial.cKDTree`; every comparison that
decides an edge is redone with :func:`pair_dist` so that the result does not
depend on the tree's internal rounding.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from .errors import InsufficientPointsError, ParameterError, UnboundedCellError
from .geometry import PointConfig, point_index

__all__ = [
    "Graph",
    "ConvexPolygon",
    "pair_dist",
    "knn_radius",
    "knn_radii",
    "knn_graph",
    "rng_graph",
    "clique_count_at",
    "voronoi_cell",
    "intrinsic_volumes_2d",
]

UNDIRECTED = "undirected"
BIDIRECTIONAL = "bidirectional"

# below this size the RNG is built from all pairs instead of a Delaunay
# triangulation; it also sidesteps Qhull on degenerate inputs
_RNG_BRUTE_MAX = 64


def pair_dist(points: np.ndarray, i, j) -> np.ndarray:
    """Euclidean distance between ``points[i]`` and ``points[j]`` (symmetric bitwise)."""
    diff = points[i] - points[j]
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on ``n_vertices`` indices.

    ``edges`` is an ``(m, 2)`` integer array with ``i < j`` in every row,
    sorted lexicographically and without repetitions.
    """

    n_vertices: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(e):
            if np.any(e[:, 0] == e[:, 1]):
                raise ParameterError("self-loops are not allowed")
            if e.min() < 0 or e.max() >= self.n_vertices:
                raise ParameterError("edge index out of range")
            e = np.unique(np.sort(e, axis=1), axis=0)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n_vertices == other.n_vertices and np.array_equal(self.edges, other.edges)

    def edge_set(self) -> set:
        return {(int(i), int(j)) for i, j in self.edges}

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    def neighbors(self, i: int) -> np.ndarray:
        e = self.edges
        return np.sort(np.concatenate([e[e[:, 0] == i, 1], e[e[:, 1] == i, 0]]))

    def to_json(self) -> str:
        return json.dumps({"n": self.n_vertices, "edges": self.edges.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        obj = json.loads(text)
        return cls(int(obj["n"]), np.asarray(obj["edges"], dtype=np.int64).reshape(-1, 2))


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Convex polygon with counter-clockwise ``vertices``.

    ``bounded`` is False when part of the seeding clip square survived, i.e.
    the true cell may extend beyond it.
    """

    vertices: np.ndarray
    bounded: bool

    def to_json(self) -> str:
        return json.dumps({"vertices": np.asarray(self.vertices).tolist(), "bounded": self.bounded})

    @classmethod
    def from_json(cls, text: str) -> "ConvexPolygon":
        obj = json.loads(text)
        return cls(np.asarray(obj["vertices"], dtype=float).reshape(-1, 2), bool(obj["bounded"]))


def _points(config) -> np.ndarray:
    return config.points if isinstance(config, PointConfig) else np.asarray(config, dtype=float)


# -- k nearest neighbours ---------------------------------------------------

def knn_radii(points: np.ndarray, k: int, tree: cKDTree = None) -> np.ndarray:
    """k-NN radius of every point: distance to its k-th nearest other point.

    Entries are ``inf`` when fewer than ``k`` other points exist.
    """
    if k < 1:
        raise ParameterError("k must be a positive integer")
    n = len(points)
    if n <= k:
        return np.full(n, np.inf)
    tree = cKDTree(points) if tree is None else tree
    _, idx = tree.query(points, k=k + 1)
    kth = idx[:, k]
    return pair_dist(points, np.arange(n), kth)


def knn_radius(config: PointConfig, center, k: int) -> float:
    """Radius of the smallest closed ball about ``center`` holding k+1 points."""
    if k < 1:
        raise ParameterError("k must be a positive integer")
    pts = config.points
    i = point_index(config, center)
    if len(pts) <= k:
        return float("inf")
    d = np.delete(pair_dist(pts, i, slice(None)), i)
    return float(np.partition(d, k - 1)[k - 1])


def _knn_directed(points, radii, tree):
    """Directed pairs (i, j) with |x_i - x_j| <= radii[i], j != i."""
    n = len(points)
    r = np.where(np.isfinite(radii), radii * (1 + 1e-9) + 1e-300, np.inf)
    if np.all(np.isinf(r)):
        i, j = np.nonzero(~np.eye(n, dtype=bool))
        return i, j
    lists = tree.query_ball_point(points, r=np.where(np.isinf(r), 1e300, r))
    lens = np.fromiter((len(lst) for lst in lists), dtype=np.int64, count=n)
    i = np.repeat(np.arange(n), lens)
    j = np.fromiter((v for lst in lists for v in lst), dtype=np.int64, count=int(lens.sum()))
    keep = (i != j)
    i, j = i[keep], j[keep]
    ok = pair_dist(points, i, j) <= radii[i]
    return i[ok], j[ok]


def knn_edges(points: np.ndarray, k: int, mode: str = UNDIRECTED, allow_infinite: bool = False):
    """Edge array of the k-NN graph; helper shared with the score evaluators."""
    if mode not in (UNDIRECTED, BIDIRECTIONAL):
        raise ParameterError(f"unknown k-NN mode {mode!r}")
    n = len(points)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    tree = cKDTree(points)
    radii = knn_radii(points, k, tree)
    if not allow_infinite and np.any(np.isinf(radii)):
        raise InsufficientPointsError(f"k-NN radius infinite: {n} points but k={k}")
    i, j = _knn_directed(points, radii, tree)
    a, b = np.minimum(i, j), np.maximum(i, j)
    codes = a * n + b
    if mode == UNDIRECTED:
        codes = np.unique(codes)
    else:
        u, counts = np.unique(codes, return_counts=True)
        codes = u[counts == 2]
    return np.stack([codes // n, codes % n], axis=1)


def knn_graph(config: PointConfig, k: int, mode: str = UNDIRECTED) -> Graph:
    """Undirected (max rule) or bidirectional (min rule) k-NN graph."""
    pts = _points(config)
    return Graph(len(pts), knn_edges(pts, k, mode))


# -- relative neighbourhood graph -------------------------------------------

def _rng_brute(points: np.ndarray) -> np.ndarray:
    n = len(points)
    diff = points[:, None, :] - points[None, :, :]
    dm = np.sqrt(np.sum(diff * diff, axis=-1))
    iu, ju = np.triu_indices(n, 1)
    out = []
    for lo in range(0, len(iu), 4096):
        i, j = iu[lo:lo + 4096], ju[lo:lo + 4096]
        d = dm[i, j][:, None]
        blocked = np.any((dm[i] < d) & (dm[j] < d), axis=1)
        out.append(np.stack([i[~blocked], j[~blocked]], axis=1))
    return np.concatenate(out) if out else np.empty((0, 2), dtype=np.int64)


def _delaunay_pairs(points: np.ndarray) -> np.ndarray:
    simp = Delaunay(points).simplices
    m = simp.shape[1]
    pairs = np.concatenate([simp[:, [a, b]] for a, b in combinations(range(m), 2)])
    return np.unique(np.sort(pairs, axis=1), axis=0)


def rng_edges(points: np.ndarray) -> np.ndarray:
    """Edge array of the relative neighbourhood graph (open lunes)."""
    n, d = points.shape if points.ndim == 2 else (0, 0)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    if n <= _RNG_BRUTE_MAX or d == 1:
        if d == 1:
            order = np.argsort(points[:, 0], kind="stable")
            e = np.stack([order[:-1], order[1:]], axis=1)
            return np.sort(e, axis=1)
        return _rng_brute(points)
    try:
        cand = _delaunay_pairs(points)
    except QhullError:
        return _rng_brute(points)
    tree = cKDTree(points)
    i, j = cand[:, 0], cand[:, 1]
    dij = pair_dist(points, i, j)
    mids = (points[i] + points[j]) / 2
    # the open lune lies inside the ball of radius |xi-xj|*sqrt(3)/2 about the midpoint
    lists = tree.query_ball_point(mids, r=dij * (np.sqrt(3) / 2) * (1 + 1e-9))
    keep = np.ones(len(cand), dtype=bool)
    for e, zs in enumerate(lists):
        if len(zs) <= 2:
            continue
        z = np.asarray(zs)
        z = z[(z != i[e]) & (z != j[e])]
        if np.any((pair_dist(points, z, i[e]) < dij[e]) & (pair_dist(points, z, j[e]) < dij[e])):
            keep[e] = False
    return cand[keep]


def rng_graph(config: PointConfig) -> Graph:
    """Relative neighbourhood graph: {i, j} is an edge iff no point lies in their open lune."""
    pts = _points(config)
    return Graph(len(pts), rng_edges(pts))


# -- cliques ------------------------------------------------------------------

def _count_cliques(adj: np.ndarray, cand: np.ndarray, size: int) -> int:
    if size == 0:
        return 1
    if size == 1:
        return int(len(cand))
    total = 0
    for pos, v in enumerate(cand):
        rest = cand[pos + 1:]
        total += _count_cliques(adj, rest[adj[v, rest]], size - 1)
    return total


def clique_counts(points: np.ndarray, indices, k: int, t: float) -> np.ndarray:
    """Number of k-cliques (pairwise distances < t) containing each indexed point."""
    if k < 2:
        raise ParameterError("clique size k must be at least 2")
    if not t > 0:
        raise ParameterError("connection radius t must be positive")
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    out = np.zeros(len(indices), dtype=np.int64)
    if len(points) < 2 or len(indices) == 0:
        return out
    tree = cKDTree(points)
    lists = tree.query_ball_point(points[indices], r=t)
    for pos, (c, nb) in enumerate(zip(indices, lists)):
        nb = np.asarray([v for v in nb if v != c], dtype=np.int64)
        if len(nb):
            nb = nb[pair_dist(points, c, nb) < t]
        if len(nb) < k - 1:
            continue
        if k == 2:
            out[pos] = len(nb)
            continue
        sub = points[nb]
        diff = sub[:, None, :] - sub[None, :, :]
        adj = np.sqrt(np.sum(diff * diff, axis=-1)) < t
        np.fill_diagonal(adj, False)
        out[pos] = _count_cliques(adj, np.arange(len(nb)), k - 1)
    return out


def clique_count_at(config: PointConfig, center, k: int, t: float) -> int:
    """Number of k-subsets containing ``center`` with all pairwise distances < t."""
    i = point_index(config, center)
    return int(clique_counts(config.points, [i], k, t)[0])


# -- Voronoi cells in the plane ---------------------------------------------

def _clip(poly, labels, a, b, label):
    """Clip a CCW polygon to the half-plane a.x <= b; labels[i] tags edge i -> i+1."""
    s = poly @ a - b
    inside = s <= 0
    if np.all(inside):
        return poly, labels
    if not np.any(inside):
        return poly[:0], labels[:0]
    m = len(poly)
    out, out_lab = [], []
    for i in range(m):
        j = (i + 1) % m
        if inside[i]:
            out.append(poly[i])
            out_lab.append(labels[i])
            if not inside[j]:
                # leaving: edge i->cut keeps its label, the cut edge follows
                lam = s[i] / (s[i] - s[j])
                out.append(poly[i] + lam * (poly[j] - poly[i]))
                out_lab.append(label)
        elif inside[j]:
            lam = s[i] / (s[i] - s[j])
            out.append(poly[i] + lam * (poly[j] - poly[i]))
            out_lab.append(labels[i])
    return np.asarray(out), np.asarray(out_lab, dtype=np.int64)


def cell_from_points(points: np.ndarray, c: int, clip_radius: float, tol: float = 1e-12) -> ConvexPolygon:
    """Voronoi cell of ``points[c]``, in coordinates recentred at that point."""
    if not clip_radius > 0:
        raise ParameterError("clip_radius must be positive")
    if points.shape[1] != 2:
        raise ParameterError("Voronoi cells are implemented in d = 2 only")
    others = np.delete(points, c, axis=0) - points[c]
    h = float(clip_radius)
    poly = np.array([[-h, -h], [h, -h], [h, h], [-h, h]])
    labels = np.full(4, -1, dtype=np.int64)
    if len(others):
        sq = np.sum(others * others, axis=1)
        order = np.argsort(sq, kind="stable")
        reach = np.max(np.sum(poly * poly, axis=1))
        for y in order:
            # the bisector of y lies at distance |y|/2; no cut beyond the cell's reach
            if sq[y] / 4 > reach:
                break
            poly, labels = _clip(poly, labels, others[y], sq[y] / 2, int(y))
            if len(poly) == 0:
                break
            reach = np.max(np.sum(poly * poly, axis=1))
    if len(poly):
        # drop vertices duplicated by clipping through an existing vertex
        nxt = np.roll(poly, -1, axis=0)
        keep = np.sqrt(np.sum((nxt - poly) ** 2, axis=1)) > tol * max(h, 1.0)
        if np.count_nonzero(keep) >= 3:
            poly, labels = poly[keep], labels[keep]
    bounded = bool(len(poly) >= 3 and not np.any(labels == -1))
    return ConvexPolygon(poly, bounded)


def voronoi_cell(config: PointConfig, center, clip_radius: float) -> ConvexPolygon:
    """Voronoi cell of ``center`` (recentred at the origin) inside a clip square.

    The cell is the intersection of the bisector half-planes of all other
    points with the square of half-width ``clip_radius``.
    """
    if config.dimension != 2:
        raise ParameterError("Voronoi cells are implemented in d = 2 only")
    i = point_index(config, center)
    return cell_from_points(config.points, i, clip_radius)


def intrinsic_volumes_2d(cell: ConvexPolygon):
    """``(v0, v1, v2) = (1, perimeter / 2, area)`` of a bounded planar cell."""
    v = np.asarray(cell.vertices, dtype=float)
    if not cell.bounded or len(v) < 3:
        raise UnboundedCellError("intrinsic volumes need a bounded cell with at least 3 vertices")
    nxt = np.roll(v, -1, axis=0)
    area = 0.5 * abs(np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]))
    perimeter = np.sum(np.sqrt(np.sum((nxt - v) ** 2, axis=1)))
    return 1.0, float(perimeter / 2), float(area)
