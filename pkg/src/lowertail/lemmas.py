"""Executable checks of the structural properties the lower-tail bounds rely on.

Each check works on one configuration; :func:`run_suite` sweeps them over
Poisson samples and collects :class:`LemmaReport` records.  A trial that
violates a property keeps a serialized witness which replays from the
stored configuration and inserted point.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import LowerTailError, ParameterError
from .geometry import BoxWindow, PointConfig, RngStream, point_index, sample_poisson
from .graphs import BIDIRECTIONAL, UNDIRECTED, knn_radii, pair_dist, rng_edges
from .scores import (CliqueCount, KnnPower, PowerEdgeRGG, RngPower, ScoreSpec, VoronoiIntrinsic,
                     is_increasing, scores_at)
from .stabilization import cone_radii, verify_stabilization

__all__ = [
    "LemmaReport",
    "exceeds",
    "exceptional_set",
    "check_weakly_decreasing",
    "check_increasing",
    "check_R_decreasing",
    "check_R_bounded",
    "check_rng_angles",
    "rng_angle_stats",
    "knn_set",
    "default_exceptional_bound",
    "run_suite",
    "SUITES",
]

REL_TOL = 1e-12
MAX_SKIP_FRACTION = 0.01


@dataclass
class LemmaReport:
    lemma_id: str
    trials: int
    violations: int
    skipped: int = 0
    worst_case: dict = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.skipped <= MAX_SKIP_FRACTION * max(self.trials, 1)

    def to_json(self) -> str:
        return json.dumps({"lemma_id": self.lemma_id, "trials": self.trials,
                           "violations": self.violations, "skipped": self.skipped,
                           "passed": self.passed, "worst_case": self.worst_case,
                           "details": self.details})


def exceeds(new, old) -> np.ndarray:
    """``new > old`` beyond floating-point noise of the summation order."""
    new, old = np.asarray(new), np.asarray(old)
    return new > old + REL_TOL * np.maximum(np.abs(old), np.abs(new))


def _kind_points(config):
    return config.points if isinstance(config, PointConfig) else np.asarray(config, dtype=float)


def default_exceptional_bound(spec: ScoreSpec, d: int = 2) -> int:
    if isinstance(spec.kind, KnnPower):
        return spec.kind.k
    if isinstance(spec.kind, RngPower):
        if d != 2:
            raise ParameterError("the relative-neighbourhood degree bound is instantiated for d = 2 only")
        return 6
    raise ParameterError("weak decreasingness is checked for k-NN and relative-neighbourhood scores")


def exceptional_set(spec: ScoreSpec, config: PointConfig, x, cover=None) -> np.ndarray:
    """Indices y of ``config`` whose score strictly increases when ``x`` is added."""
    pts = _kind_points(config)
    x = np.asarray(x, dtype=float).reshape(1, pts.shape[1])
    idx = np.arange(len(pts))
    before = scores_at(spec, pts, idx, cover)
    after = scores_at(spec, np.vstack([pts, x]), idx, cover)
    return np.flatnonzero(exceeds(after, before))


def check_weakly_decreasing(spec: ScoreSpec, config: PointConfig, x, bound: int = None, cover=None):
    """``(exceptional_set, passed)`` with ``passed = |exceptional_set| <= bound``."""
    d = _kind_points(config).shape[1]
    bound = default_exceptional_bound(spec, d) if bound is None else bound
    exc = exceptional_set(spec, config, x, cover)
    return exc, len(exc) <= bound


def knn_set(points: np.ndarray, center: int, k: int) -> np.ndarray:
    """Indices within the k-NN radius of ``center`` (closed ball), centre excluded."""
    radius = knn_radii(points, k)[center]
    d = pair_dist(points, center, slice(None))
    out = np.flatnonzero(d <= radius)
    return out[out != center]


def check_increasing(spec: ScoreSpec, config: PointConfig, x) -> bool:
    """No score of an existing point decreases when ``x`` is added."""
    if not is_increasing(spec):
        raise ParameterError("check_increasing applies to clique counts and geometric-graph edge sums")
    pts = _kind_points(config)
    x = np.asarray(x, dtype=float).reshape(1, pts.shape[1])
    idx = np.arange(len(pts))
    before = scores_at(spec, pts, idx)
    after = scores_at(spec, np.vstack([pts, x]), idx)
    return not np.any(exceeds(before, after))


def _radius_k(radius_kind) -> int:
    if radius_kind == "voronoi":
        return 1
    if isinstance(radius_kind, (tuple, list)) and radius_kind[0] == "knn":
        return int(radius_kind[1])
    raise ParameterError(f"unknown radius kind {radius_kind!r}")


def check_R_decreasing(radius_kind, config: PointConfig, x, cover=None) -> bool:
    """No stabilization radius of an existing point grows when ``x`` is added."""
    pts = _kind_points(config)
    k = _radius_k(radius_kind)
    idx = np.arange(len(pts))
    before = cone_radii(pts, idx, k, cover)
    after = cone_radii(np.vstack([pts, np.asarray(x, dtype=float).reshape(1, -1)]), idx, k, cover)
    return bool(np.all(after <= before))


def rng_angle_stats(config):
    """Smallest angle between two relative neighbours of a common vertex, and the max degree."""
    pts = _kind_points(config)
    if pts.shape[1] != 2:
        raise ParameterError("angle check is implemented in d = 2 only")
    edges = rng_edges(pts)
    n = len(pts)
    if len(edges) == 0:
        return np.inf, 0
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    vec = pts[dst] - pts[src]
    ang = np.arctan2(vec[:, 1], vec[:, 0])
    order = np.lexsort((ang, src))
    src, ang = src[order], ang[order]
    deg = np.bincount(src, minlength=n)
    min_angle = np.inf
    starts = np.concatenate([[0], np.cumsum(deg)[:-1]])
    for v in np.flatnonzero(deg >= 2):
        a = ang[starts[v]:starts[v] + deg[v]]
        gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
        min_angle = min(min_angle, float(gaps.min()))
    return min_angle, int(deg.max())


def check_rng_angles(config) -> bool:
    """Every pair of relative neighbours of a vertex subtends at least pi/3 (minus 1e-9)."""
    min_angle, _ = rng_angle_stats(config)
    return bool(min_angle >= np.pi / 3 - 1e-9)


def check_R_bounded(spec: ScoreSpec, radius_kind, samples: int, delta: float, M_list,
                    rng: RngStream, margin: float = None, required_from: float = None,
                    cover=None) -> LemmaReport:
    """Count Palm samples with radius <= M and score >= delta * M^2, per M.

    Each sample is Poisson(1) in a box of half-side ``margin`` (default
    ``max(M_list)``) plus a point at the origin; when the radius is at most
    ``margin`` the score there is exact.  ``violations`` totals the counts for
    ``M >= required_from`` (default: the largest M).
    """
    kind = spec.kind
    ok = ((isinstance(kind, VoronoiIntrinsic) and kind.j < 2)
          or (isinstance(kind, (KnnPower, RngPower)) and kind.alpha < 2))
    if not ok:
        raise ParameterError("radius-boundedness applies to v0, v1 and to edge powers alpha < d")
    M_list = sorted(float(m) for m in M_list)
    margin = max(M_list) if margin is None else float(margin)
    required_from = M_list[-1] if required_from is None else required_from
    k = _radius_k(radius_kind)
    window = BoxWindow(2 * margin, 2)
    per_M = {m: 0 for m in M_list}
    radii, values = [], []
    skipped = 0
    for i in range(samples):
        cfg = sample_poisson(1.0, window, rng.child(i))
        pts = np.vstack([[0.0, 0.0], cfg.points])
        R = float(cone_radii(pts, [0], k, cover)[0])
        if not R <= margin:
            radii.append(R)
            values.append(np.nan)
            continue
        try:
            xi = float(scores_at(spec, pts, [0], cover)[0])
        except LowerTailError:
            skipped += 1
            continue
        radii.append(R)
        values.append(xi)
        for m in M_list:
            if R <= m and xi >= delta * m ** 2:
                per_M[m] += 1
    violations = sum(c for m, c in per_M.items() if m >= required_from)
    return LemmaReport(f"R-bounded[{spec}]", samples, violations, skipped, None,
                       {"delta": delta, "per_M": {repr(m): c for m, c in per_M.items()},
                        "required_from": required_from})


# -- sweeps -----------------------------------------------------------------------

def _sample(rng, n, margin):
    return sample_poisson(1.0, BoxWindow(n + 2 * margin, 2), rng)


def _uniform_in(rng, side):
    return (rng.generator().random(2) - 0.5) * side


def _witness(config, x=None, extra=None):
    w = {"config": config.to_text()}
    if x is not None:
        w["x"] = np.asarray(x).tolist()
    if extra:
        w.update(extra)
    return w


def _sweep(lemma_id, trials, rng, n, margin, body):
    violations = skipped = 0
    worst, worst_size = None, -1
    details = {}
    for i in range(trials):
        sub = rng.child(i)
        cfg = _sample(sub.child(0), n, margin)
        try:
            bad, size, witness, info = body(cfg, sub)
        except LowerTailError:
            skipped += 1
            continue
        for key, val in (info or {}).items():
            details[key] = max(details.get(key, val), val)
        if bad:
            violations += 1
            if size > worst_size:
                worst, worst_size = dict(witness, trial=i), size
    return LemmaReport(lemma_id, trials, violations, skipped, worst, details)


def _weak_decreasing_body(spec, n):
    def body(cfg, sub):
        x = _uniform_in(sub.child(1), n)
        exc, passed = check_weakly_decreasing(spec, cfg, x)
        info = {"max_exceptional": len(exc)}
        bad = not passed
        if isinstance(spec.kind, KnnPower) and len(exc):
            pts = np.vstack([cfg.points, x])
            allowed = knn_set(pts, len(pts) - 1, spec.kind.k)
            contained = np.isin(exc, allowed)
            bad = bad or not np.all(contained)
            # points that took x as a new neighbour: the wider set a score can grow on
            reverse = exc[~contained]
            radii = knn_radii(pts, spec.kind.k)
            info["outside_knn_of_x"] = int(np.count_nonzero(~contained))
            info["outside_knn_and_reverse"] = int(np.count_nonzero(
                pair_dist(pts, len(pts) - 1, reverse) > radii[reverse]))
        if isinstance(spec.kind, RngPower):
            pts = np.vstack([cfg.points, x])
            e = rng_edges(pts)
            deg_x = int(np.count_nonzero(e == len(pts) - 1))
            bad = bad or len(exc) > deg_x
        return bad, len(exc), _witness(cfg, x, {"exceptional": exc.tolist()}), info
    return body


def _increasing_body(spec, n):
    def body(cfg, sub):
        x = _uniform_in(sub.child(1), n)
        return not check_increasing(spec, cfg, x), 1, _witness(cfg, x), None
    return body


def _R_decreasing_body(radius_kind, n):
    def body(cfg, sub):
        x = _uniform_in(sub.child(1), n)
        return not check_R_decreasing(radius_kind, cfg, x), 1, _witness(cfg, x), None
    return body


def _stabilization_body(spec, radius_kind, n):
    k = _radius_k(radius_kind)

    def body(cfg, sub):
        inner = np.flatnonzero(BoxWindow(n, 2).contains(cfg.points))
        if len(inner) == 0:
            return False, 0, None, None
        c = int(inner[sub.child(2).generator().integers(len(inner))])
        R = float(cone_radii(cfg.points, [c], k)[0])
        if not np.isfinite(R):
            raise LowerTailError("infinite stabilization radius")
        ok = verify_stabilization(spec, cfg, c, R)
        return not ok, 1, _witness(cfg, extra={"center": c, "radius": R}), {"max_radius": R}
    return body


def _angle_body(cfg, sub):
    min_angle, max_deg = rng_angle_stats(cfg)
    bad = not (min_angle >= np.pi / 3 - 1e-9) or max_deg > 6
    return bad, 1, _witness(cfg, extra={"min_angle": min_angle}), {"max_degree": max_deg}


def _suite_items(n):
    items = {"weak-decreasing": [], "increasing": [], "R-decreasing": [],
             "stabilization": [], "rng-angles": []}
    for k in (1, 2, 3):
        for mode in (UNDIRECTED, BIDIRECTIONAL):
            spec = ScoreSpec(KnnPower(k, 1.0, mode))
            items["weak-decreasing"].append((f"weakly-decreasing[{spec}]", _weak_decreasing_body(spec, n)))
    spec = ScoreSpec(RngPower(1.0))
    items["weak-decreasing"].append((f"weakly-decreasing[{spec}]", _weak_decreasing_body(spec, n)))
    for spec in (ScoreSpec(CliqueCount(3, 1.0)), ScoreSpec(PowerEdgeRGG(1.0, 1.0))):
        items["increasing"].append((f"increasing[{spec}]", _increasing_body(spec, n)))
    for kind in ("voronoi", ("knn", 1), ("knn", 2), ("knn", 3)):
        label = kind if isinstance(kind, str) else f"knn{kind[1]}"
        items["R-decreasing"].append((f"R-decreasing[{label}]", _R_decreasing_body(kind, n)))
    pairs = [(ScoreSpec(VoronoiIntrinsic(j)), "voronoi") for j in (0, 1, 2)]
    pairs += [(ScoreSpec(KnnPower(k, 1.0, mode)), ("knn", k))
              for k in (1, 2, 3) for mode in (UNDIRECTED, BIDIRECTIONAL)]
    pairs += [(ScoreSpec(RngPower(1.0)), "voronoi")]
    for spec, kind in pairs:
        items["stabilization"].append((f"stabilization[{spec}]", _stabilization_body(spec, kind, n)))
    items["rng-angles"].append(("rng-angles", _angle_body))
    return items


SUITES = ("weak-decreasing", "increasing", "R-decreasing", "stabilization", "rng-angles")


def run_suite(trials: int, rng: RngStream, suites=("all",), n: float = 10.0,
              margin: float = 3.0) -> list:
    """Run the named property sweeps on Poisson(1) samples in Q_(n + 2 margin)."""
    wanted = SUITES if "all" in suites else tuple(suites)
    unknown = set(wanted) - set(SUITES)
    if unknown:
        raise ParameterError(f"unknown suites {sorted(unknown)}")
    items = _suite_items(n)
    reports = []
    for s_pos, name in enumerate(SUITES):
        if name not in wanted:
            continue
        for i_pos, (lemma_id, body) in enumerate(items[name]):
            stream = rng.child(1000 * s_pos + i_pos)
            reports.append(_sweep(lemma_id, trials, stream, n, margin, body))
    return reports


def replay(report: LemmaReport, spec: ScoreSpec = None):
    """Re-run the stored witness of a weak-decreasing report: its exceptional set."""
    if not report.worst_case:
        return None
    cfg = PointConfig.from_text(report.worst_case["config"])
    return exceptional_set(spec, cfg, report.worst_case["x"])
