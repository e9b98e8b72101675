"""Score functions, truncations and the empirical functional H_n.

A :class:`ScoreSpec` pairs one base score (clique count, power-weighted
geometric-graph edges, k-NN edges, relative-neighbourhood edges, or an
intrinsic volume of the Voronoi cell) with optional truncations.  Scores are
evaluated at a distinguished point of a finite configuration, which stands
in for the configuration recentred at that point.

Canonical string form::

    rgg:alpha=0,t=1
    clique:k=3,t=1;cap=5
    knn:k=2,alpha=1,mode=undirected;range=4
    rng:alpha=1;deltam=0.01/2
    voronoi:j=1;altcap=1.5/0.25/3

Truncations occupy two slots: ``range`` restricts the configuration to a
ball; ``cap``, ``deltam`` (restrict to the cube Q_M, cap at delta*M^d) and
``altcap`` (restrict to Q_3M, cap at C0*M^(d-eps0)) clamp the value.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import gamma, pi

import numpy as np
from scipy.spatial import cKDTree

from .errors import (InsufficientPointsError, LowerTailError, ParameterError,
                     UnboundedCellError, UnstabilizedError)
from .geometry import BoxWindow, PointConfig, point_index
from .graphs import (BIDIRECTIONAL, UNDIRECTED, cell_from_points, clique_counts,
                     intrinsic_volumes_2d, knn_edges, pair_dist, rng_edges)
from .stabilization import ConeCover, cone_radii

__all__ = [
    "CliqueCount", "PowerEdgeRGG", "KnnPower", "RngPower", "VoronoiIntrinsic",
    "Cap", "Range", "DeltaM", "AltDeltaM",
    "ScoreSpec", "ScoredConfig",
    "parse_spec", "format_spec", "truncate",
    "evaluate_score", "score_all", "h_n", "scores_at", "stabilization_radii",
    "is_combinatorial", "is_increasing", "rgg_mean_density",
]


# -- base scores ------------------------------------------------------------

@dataclass(frozen=True)
class CliqueCount:
    """(1/k) times the number of k-cliques of the geometric graph containing the point."""
    k: int
    t: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ParameterError("CliqueCount needs an integer k >= 2")
        if not self.t > 0:
            raise ParameterError("CliqueCount needs t > 0")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class PowerEdgeRGG:
    """Half the sum of |x|^alpha over neighbours at distance < t."""
    alpha: float
    t: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ParameterError("alpha must be nonnegative")
        if not self.t > 0:
            raise ParameterError("t must be positive")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class KnnPower:
    """Half the sum of |x|^alpha over k-NN edges at the point."""
    k: int
    alpha: float
    mode: str = UNDIRECTED

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError("KnnPower needs an integer k >= 1")
        if not self.alpha >= 0:
            raise ParameterError("alpha must be nonnegative")
        if self.mode not in (UNDIRECTED, BIDIRECTIONAL):
            raise ParameterError(f"mode must be {UNDIRECTED!r} or {BIDIRECTIONAL!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "alpha", float(self.alpha))


@dataclass(frozen=True)
class RngPower:
    """Half the sum of |x|^alpha over relative-neighbourhood edges at the point."""
    alpha: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ParameterError("alpha must be nonnegative")
        object.__setattr__(self, "alpha", float(self.alpha))


@dataclass(frozen=True)
class VoronoiIntrinsic:
    """Intrinsic volume v_j of the planar Voronoi cell (j = 0, 1, 2)."""
    j: int

    def __post_init__(self):
        if self.j not in (0, 1, 2):
            raise ParameterError("VoronoiIntrinsic needs j in {0, 1, 2}")
        object.__setattr__(self, "j", int(self.j))


# -- truncations --------------------------------------------------------------

@dataclass(frozen=True)
class Cap:
    """Clamp the value at M."""
    M: float

    def __post_init__(self):
        if not self.M > 0:
            raise ParameterError("Cap needs M > 0")
        object.__setattr__(self, "M", float(self.M))

    def cap(self, d):
        return self.M


@dataclass(frozen=True)
class Range:
    """Evaluate on the configuration inside the closed ball of radius r."""
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ParameterError("Range needs r > 0")
        object.__setattr__(self, "r", float(self.r))


@dataclass(frozen=True)
class DeltaM:
    """Evaluate inside the cube of side M and clamp at delta * M^d."""
    delta: float
    M: float

    def __post_init__(self):
        if not (self.delta > 0 and self.M > 0):
            raise ParameterError("DeltaM needs delta > 0 and M > 0")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "M", float(self.M))

    @property
    def cube_side(self):
        return self.M

    def cap(self, d):
        return self.delta * self.M ** d


@dataclass(frozen=True)
class AltDeltaM:
    """Variant: evaluate inside the cube of side 3M and clamp at C0 * M^(d - eps0)."""
    C0: float
    eps0: float
    M: float

    def __post_init__(self):
        if not (self.C0 > 0 and self.eps0 > 0 and self.M > 0):
            raise ParameterError("AltDeltaM needs positive C0, eps0 and M")
        for name in ("C0", "eps0", "M"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def cube_side(self):
        return 3 * self.M

    def cap(self, d):
        return self.C0 * self.M ** (d - self.eps0)


_CLAMPS = (Cap, DeltaM, AltDeltaM)


@dataclass(frozen=True)
class ScoreSpec:
    kind: object
    range_trunc: Range = None
    clamp: object = None

    def __post_init__(self):
        if not isinstance(self.kind, (CliqueCount, PowerEdgeRGG, KnnPower, RngPower, VoronoiIntrinsic)):
            raise ParameterError(f"unknown score kind {self.kind!r}")
        if self.range_trunc is not None and not isinstance(self.range_trunc, Range):
            raise ParameterError("range slot holds a Range truncation")
        if self.clamp is not None and not isinstance(self.clamp, _CLAMPS):
            raise ParameterError("clamp slot holds Cap, DeltaM or AltDeltaM")

    def __str__(self):
        return format_spec(self)


def truncate(spec: ScoreSpec, truncation) -> ScoreSpec:
    """Attach a truncation; filling an occupied slot is an error."""
    if isinstance(truncation, Range):
        if spec.range_trunc is not None:
            raise ParameterError("range truncation already set")
        return replace(spec, range_trunc=truncation)
    if isinstance(truncation, _CLAMPS):
        if spec.clamp is not None:
            raise ParameterError("clamp truncation already set")
        return replace(spec, clamp=truncation)
    raise ParameterError(f"unknown truncation {truncation!r}")


def is_combinatorial(spec: ScoreSpec) -> bool:
    """True when the score takes values in (1/k) * integers (exact comparison is valid)."""
    kind = spec.kind
    if isinstance(kind, CliqueCount):
        return True
    if isinstance(kind, (PowerEdgeRGG, KnnPower, RngPower)):
        return kind.alpha == 0
    return isinstance(kind, VoronoiIntrinsic) and kind.j == 0


def is_increasing(spec: ScoreSpec) -> bool:
    return isinstance(spec.kind, (CliqueCount, PowerEdgeRGG))


def rgg_mean_density(kind: PowerEdgeRGG, d: int = 2, intensity: float = 1.0) -> float:
    """Expected score sum per unit volume, lambda^2 / 2 * integral over B_t of |x|^alpha."""
    surface = 2 * pi ** (d / 2) / gamma(d / 2)
    return 0.5 * intensity ** 2 * surface * kind.t ** (kind.alpha + d) / (kind.alpha + d)


# -- string form ----------------------------------------------------------------

def _num(x) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


_KIND_NAMES = {CliqueCount: "clique", PowerEdgeRGG: "rgg", KnnPower: "knn",
               RngPower: "rng", VoronoiIntrinsic: "voronoi"}


def format_spec(spec: ScoreSpec) -> str:
    kind = spec.kind
    if isinstance(kind, CliqueCount):
        head = f"clique:k={kind.k},t={_num(kind.t)}"
    elif isinstance(kind, PowerEdgeRGG):
        head = f"rgg:alpha={_num(kind.alpha)},t={_num(kind.t)}"
    elif isinstance(kind, KnnPower):
        head = f"knn:k={kind.k},alpha={_num(kind.alpha)},mode={kind.mode}"
    elif isinstance(kind, RngPower):
        head = f"rng:alpha={_num(kind.alpha)}"
    else:
        head = f"voronoi:j={kind.j}"
    parts = [head]
    if spec.range_trunc is not None:
        parts.append(f"range={_num(spec.range_trunc.r)}")
    c = spec.clamp
    if isinstance(c, Cap):
        parts.append(f"cap={_num(c.M)}")
    elif isinstance(c, DeltaM):
        parts.append(f"deltam={_num(c.delta)}/{_num(c.M)}")
    elif isinstance(c, AltDeltaM):
        parts.append(f"altcap={_num(c.C0)}/{_num(c.eps0)}/{_num(c.M)}")
    return ";".join(parts)


def parse_spec(text: str) -> ScoreSpec:
    """Parse the canonical string form (see module docstring)."""
    segments = [s.strip() for s in text.strip().split(";") if s.strip()]
    if not segments:
        raise ParameterError("empty score spec")
    name, _, params = segments[0].partition(":")
    kv = {}
    for item in filter(None, (p.strip() for p in params.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ParameterError(f"malformed parameter {item!r}")
        kv[key.strip()] = val.strip()
    try:
        if name == "clique":
            kind = CliqueCount(int(kv.pop("k")), float(kv.pop("t")))
        elif name == "rgg":
            kind = PowerEdgeRGG(float(kv.pop("alpha")), float(kv.pop("t")))
        elif name == "knn":
            kind = KnnPower(int(kv.pop("k")), float(kv.pop("alpha")), kv.pop("mode", UNDIRECTED))
        elif name == "rng":
            kind = RngPower(float(kv.pop("alpha")))
        elif name == "voronoi":
            kind = VoronoiIntrinsic(int(kv.pop("j")))
        else:
            raise ParameterError(f"unknown score kind {name!r}")
    except KeyError as exc:
        raise ParameterError(f"missing parameter {exc.args[0]!r} for {name}") from None
    except ValueError as exc:
        raise ParameterError(str(exc)) from None
    if kv:
        raise ParameterError(f"unexpected parameters {sorted(kv)} for {name}")
    spec = ScoreSpec(kind)
    for seg in segments[1:]:
        key, eq, val = seg.partition("=")
        if not eq:
            raise ParameterError(f"malformed truncation {seg!r}")
        try:
            args = [float(v) for v in val.split("/")]
        except ValueError:
            raise ParameterError(f"malformed truncation {seg!r}") from None
        ctor, nargs = {"cap": (Cap, 1), "range": (Range, 1), "deltam": (DeltaM, 2),
                       "altcap": (AltDeltaM, 3)}.get(key.strip(), (None, 0))
        if ctor is None or len(args) != nargs:
            raise ParameterError(f"unknown truncation {seg!r}")
        spec = truncate(spec, ctor(*args))
    return spec


# -- evaluation -----------------------------------------------------------------

def _edge_scores(points, edges, alpha, n_idx):
    out = np.zeros(n_idx)
    if len(edges) == 0:
        return out
    w = 0.5 * pair_dist(points, edges[:, 0], edges[:, 1]) ** alpha
    return np.bincount(edges[:, 0], w, n_idx) + np.bincount(edges[:, 1], w, n_idx)


def _base_scores(kind, points: np.ndarray, indices: np.ndarray, bounded_range: bool,
                 cover: ConeCover = None, window: BoxWindow = None) -> np.ndarray:
    """Untruncated score at each indexed point, evaluated on the whole point set.

    Voronoi cells that fail to close give ``nan`` entries; other failures raise.
    """
    n = len(points)
    if isinstance(kind, CliqueCount):
        return clique_counts(points, indices, kind.k, kind.t) / kind.k
    if isinstance(kind, PowerEdgeRGG):
        out = np.zeros(len(indices))
        if n < 2 or len(indices) == 0:
            return out
        pairs = cKDTree(points[indices]).sparse_distance_matrix(
            cKDTree(points), kind.t, output_type="ndarray")
        a, b = pairs["i"].astype(np.int64), pairs["j"].astype(np.int64)
        keep = indices[a] != b
        a, b = a[keep], b[keep]
        dist = pair_dist(points, indices[a], b)
        near = dist < kind.t
        return np.bincount(a[near], 0.5 * dist[near] ** kind.alpha, len(indices))
    if isinstance(kind, KnnPower):
        try:
            edges = knn_edges(points, kind.k, kind.mode, allow_infinite=bounded_range)
        except InsufficientPointsError as exc:
            raise UnstabilizedError(str(exc)) from None
        return _edge_scores(points, edges, kind.alpha, n)[indices]
    if isinstance(kind, RngPower):
        return _edge_scores(points, rng_edges(points), kind.alpha, n)[indices]
    if isinstance(kind, VoronoiIntrinsic):
        if points.shape[1] != 2:
            raise ParameterError("Voronoi scores are implemented in d = 2 only")
        if window is not None:
            fallback = window.side * np.sqrt(2)
        else:
            fallback = 2 * float(np.max(np.ptp(points, axis=0))) + 1.0 if n else 1.0
        radii = cone_radii(points, indices, 1, cover)
        out = np.empty(len(indices))
        for pos, c in enumerate(indices):
            clip = radii[pos] if np.isfinite(radii[pos]) else fallback
            cell = cell_from_points(points, int(c), clip)
            if not cell.bounded and np.isfinite(radii[pos]):
                # cannot happen in exact arithmetic (cell lies inside B_R/sqrt2); be safe
                cell = cell_from_points(points, int(c), fallback)
            out[pos] = intrinsic_volumes_2d(cell)[kind.j] if cell.bounded else np.nan
        return out
    raise ParameterError(f"unknown score kind {kind!r}")


def _local_points(spec: ScoreSpec, points: np.ndarray, c: int):
    """Point subset and new centre index after the restricting truncations."""
    keep = np.ones(len(points), dtype=bool)
    if spec.range_trunc is not None:
        keep &= pair_dist(points, c, slice(None)) <= spec.range_trunc.r
    if isinstance(spec.clamp, (DeltaM, AltDeltaM)):
        keep &= np.all(np.abs(points - points[c]) <= spec.clamp.cube_side / 2, axis=1)
    return points[keep], int(np.sum(keep[:c]))


def scores_at(spec: ScoreSpec, points: np.ndarray, indices, cover: ConeCover = None,
              window: BoxWindow = None) -> np.ndarray:
    """Score of ``spec`` at each indexed point of ``points`` (truncations applied).

    Raises :class:`UnstabilizedError` / :class:`UnboundedCellError` on failure.
    """
    points = np.asarray(points, dtype=float)
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    restricting = spec.range_trunc is not None or isinstance(spec.clamp, (DeltaM, AltDeltaM))
    bounded_range = restricting
    if not restricting:
        vals = _base_scores(spec.kind, points, indices, False, cover, window)
    else:
        vals = np.empty(len(indices))
        for pos, c in enumerate(indices):
            local, lc = _local_points(spec, points, int(c))
            vals[pos] = _base_scores(spec.kind, local, np.array([lc]), bounded_range, cover, window)[0]
    if np.any(np.isnan(vals)):
        raise UnboundedCellError("Voronoi cell is unbounded")
    if spec.clamp is not None:
        vals = np.minimum(vals, spec.clamp.cap(points.shape[1]))
    return vals


def evaluate_score(spec: ScoreSpec, config: PointConfig, center, cover: ConeCover = None) -> float:
    """Value of the score at ``center`` with the configuration recentred there."""
    i = point_index(config, center)
    return float(scores_at(spec, config.points, [i], cover, config.window)[0])


def stabilization_radii(spec: ScoreSpec, points: np.ndarray, indices, cover: ConeCover = None) -> np.ndarray:
    """Radius beyond which the configuration cannot change the score at each point."""
    kind = spec.kind
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    d = points.shape[1] if points.ndim == 2 else 2
    if isinstance(kind, (CliqueCount, PowerEdgeRGG)):
        radii = np.full(len(indices), kind.t)
    elif isinstance(kind, KnnPower):
        if d != 2:
            raise ParameterError("k-NN stabilization radii are implemented in d = 2 only")
        radii = cone_radii(points, indices, kind.k, cover)
    else:
        if d != 2:
            raise ParameterError("cone stabilization radii are implemented in d = 2 only")
        radii = cone_radii(points, indices, 1, cover)
    if spec.range_trunc is not None:
        radii = np.minimum(radii, spec.range_trunc.r)
    if isinstance(spec.clamp, (DeltaM, AltDeltaM)):
        radii = np.minimum(radii, spec.clamp.cube_side * np.sqrt(d) / 2)
    return radii


@dataclass(frozen=True, eq=False)
class ScoredConfig:
    """Per-point scores of the points of ``config`` inside ``scoring_window``.

    ``flags`` marks points whose stabilization radius reaches outside the
    sampled window or whose evaluation failed; failed points score ``nan``.
    """

    config: PointConfig
    scoring_window: BoxWindow
    indices: np.ndarray
    per_point_scores: np.ndarray
    radii: np.ndarray
    flags: np.ndarray
    spec: ScoreSpec = field(default=None)

    @property
    def n_flagged(self) -> int:
        return int(np.count_nonzero(self.flags))

    @property
    def flagged_fraction(self) -> float:
        return self.n_flagged / len(self.indices) if len(self.indices) else 0.0


def score_all(spec: ScoreSpec, config: PointConfig, scoring_window: BoxWindow,
              cover: ConeCover = None) -> ScoredConfig:
    """Score every point of ``config`` in ``scoring_window`` using the whole configuration."""
    if scoring_window.dimension != config.dimension:
        raise ParameterError("scoring window has wrong dimension")
    if not config.window.contains_window(scoring_window):
        raise ParameterError("scoring window must lie inside the sampled window")
    pts = config.points
    idx = np.flatnonzero(scoring_window.contains(pts))
    if len(idx) == 0:
        empty = np.empty(0)
        return ScoredConfig(config, scoring_window, idx, empty, empty, np.zeros(0, dtype=bool), spec)
    radii = stabilization_radii(spec, pts, idx, cover)
    flags = radii > config.window.boundary_distance(pts[idx])
    try:
        vals = scores_at(spec, pts, idx, cover, config.window)
    except UnboundedCellError:
        vals = np.empty(len(idx))
        for pos, c in enumerate(idx):
            try:
                vals[pos] = scores_at(spec, pts, [c], cover, config.window)[0]
            except LowerTailError:
                vals[pos] = np.nan
    except UnstabilizedError:
        vals = np.full(len(idx), np.nan)
    flags = flags | np.isnan(vals)
    return ScoredConfig(config, scoring_window, idx, vals, radii, flags, spec)


def h_n(scored: ScoredConfig) -> float:
    """Sum of the per-point scores divided by the scoring volume (failed points count 0)."""
    if len(scored.per_point_scores) == 0:
        return 0.0
    return float(np.nansum(scored.per_point_scores) / scored.scoring_window.volume)
