"""Point configurations in boxes, Poisson sampling, thinning and superposition.

Points are stored as ``(n, d)`` float arrays.  All randomness flows through
:class:`RngStream`, a (seed, stream_id) pair that maps to a counter-based
Philox generator, so that trial ``i`` of an experiment can be regenerated
independently of how trials were scheduled across workers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = [
    "RngStream",
    "BoxWindow",
    "PointConfig",
    "sample_poisson",
    "thin",
    "superpose",
    "restrict",
    "point_index",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Splittable, reproducible source of randomness.

    Identical ``(seed, stream_id)`` pairs always yield identical draws;
    :meth:`child` derives statistically independent substreams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream_id <= _MASK64):
            raise ParameterError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "RngStream":
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, int(index)))
        return RngStream(self.seed, int(ss.generate_state(1, np.uint64)[0]))


@dataclass(frozen=True)
class BoxWindow:
    """Closed cube of side ``side`` centred at ``center`` (origin by default)."""

    side: float
    dimension: int = 2
    center: tuple = None

    def __post_init__(self):
        if not (np.isfinite(self.side) and self.side > 0):
            raise ParameterError(f"window side must be positive, got {self.side}")
        if self.dimension not in (1, 2, 3):
            raise ParameterError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        c = (0.0,) * self.dimension if self.center is None else tuple(float(v) for v in self.center)
        if len(c) != self.dimension:
            raise ParameterError("center has wrong dimension")
        object.__setattr__(self, "side", float(self.side))
        object.__setattr__(self, "center", c)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.center) - self.side / 2

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.center) + self.side / 2

    @property
    def volume(self) -> float:
        return self.side ** self.dimension

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def contains_window(self, other: "BoxWindow", tol: float = 1e-12) -> bool:
        return bool(np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol))

    def expanded(self, margin: float) -> "BoxWindow":
        """The concentric box enlarged by ``margin`` on every side."""
        return BoxWindow(self.side + 2 * margin, self.dimension, self.center)

    def boundary_distance(self, points) -> np.ndarray:
        """Distance from each (interior) point to the complement of the box."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        return np.min(np.minimum(pts - self.lo, self.hi - pts), axis=1)


@dataclass(frozen=True, eq=False)
class PointConfig:
    """A finite point set inside a box window.

    Coincident points are rejected at construction.  When ``window`` is
    omitted the smallest origin-centred cube holding all points is used.
    """

    points: np.ndarray
    window: BoxWindow = None
    dimension: int = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            if self.window is not None:
                pts = pts.reshape(-1, self.window.dimension)
            else:
                pts = pts.reshape(1, -1) if pts.size else pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] not in (1, 2, 3):
            raise ParameterError(f"points must have shape (n, d) with 1 <= d <= 3, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ParameterError("all coordinates must be finite")
        d = pts.shape[1]
        window = self.window
        if window is None:
            half = float(np.max(np.abs(pts))) if len(pts) else 0.0
            window = BoxWindow(2 * half if half > 0 else 1.0, d)
        if window.dimension != d:
            raise ParameterError("window and points differ in dimension")
        if not np.all(window.contains(pts)):
            raise ParameterError("all points must lie inside the window")
        if len(pts) > 1 and len(np.unique(pts, axis=0)) != len(pts):
            raise ParameterError("configuration contains coincident points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "dimension", d)

    @classmethod
    def _trusted(cls, points: np.ndarray, window: BoxWindow) -> "PointConfig":
        # skips validation; for internally generated samples only
        obj = object.__new__(cls)
        pts = np.ascontiguousarray(points, dtype=float).reshape(-1, window.dimension)
        pts.setflags(write=False)
        object.__setattr__(obj, "points", pts)
        object.__setattr__(obj, "window", window)
        object.__setattr__(obj, "dimension", window.dimension)
        return obj

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, PointConfig):
            return NotImplemented
        return self.window == other.window and np.array_equal(self.points, other.points)

    def __repr__(self):
        return f"PointConfig(n={len(self)}, d={self.dimension}, window={self.window})"

    def with_point(self, x) -> "PointConfig":
        """Return the configuration with ``x`` appended (window enlarged if needed)."""
        x = np.asarray(x, dtype=float).reshape(1, self.dimension)
        window = self.window
        if not window.contains(x)[0]:
            half = float(np.max(np.abs(x - np.asarray(window.center))))
            window = BoxWindow(2 * half, self.dimension, window.center)
        return PointConfig(np.vstack([self.points, x]), window)

    def without(self, index: int) -> "PointConfig":
        return PointConfig._trusted(np.delete(self.points, index, axis=0), self.window)

    # -- serialization -------------------------------------------------
    def to_text(self) -> str:
        w = self.window
        header = [str(self.dimension), str(len(self)), repr(w.side)]
        if any(w.center):
            header += [repr(c) for c in w.center]
        lines = [" ".join(header)]
        lines += [" ".join(repr(float(v)) for v in p) for p in self.points]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PointConfig":
        rows = [ln.split() for ln in text.strip().splitlines() if ln.strip() and not ln.startswith("#")]
        head = rows[0]
        d, n, side = int(head[0]), int(head[1]), float(head[2])
        center = tuple(float(v) for v in head[3:3 + d]) if len(head) >= 3 + d else None
        if len(rows) - 1 != n or any(len(r) != d for r in rows[1:]):
            raise ParameterError(f"expected {n} points of dimension {d}, found {len(rows) - 1} rows")
        pts = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(n, d)
        return cls(pts, BoxWindow(side, d, center))

    def to_json(self) -> str:
        w = self.window
        return json.dumps({"d": self.dimension, "side": w.side, "center": list(w.center),
                           "points": self.points.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "PointConfig":
        obj = json.loads(text)
        if isinstance(obj, list):
            return cls(np.asarray(obj, dtype=float))
        d = int(obj["d"])
        pts = np.asarray(obj["points"], dtype=float).reshape(-1, d)
        return cls(pts, BoxWindow(obj["side"], d, obj.get("center")))


def point_index(config: PointConfig, center) -> int:
    """Index of ``center`` in ``config``; ``center`` may already be an index."""
    if isinstance(center, (int, np.integer)):
        if not 0 <= center < len(config):
            raise ParameterError(f"center index {center} out of range")
        return int(center)
    c = np.asarray(center, dtype=float).reshape(-1)
    if c.shape[0] != config.dimension:
        raise ParameterError("center has wrong dimension")
    hits = np.flatnonzero(np.all(config.points == c, axis=1))
    if len(hits) == 0:
        raise ParameterError(f"center {c.tolist()} is not a point of the configuration")
    return int(hits[0])


def sample_poisson(intensity: float, window: BoxWindow, rng: RngStream) -> PointConfig:
    """Homogeneous Poisson process of the given intensity in ``window``."""
    if not intensity > 0:
        raise ParameterError(f"intensity must be positive, got {intensity}")
    gen = rng.generator()
    n = gen.poisson(intensity * window.volume)
    pts = window.lo + window.side * gen.random((n, window.dimension))
    return PointConfig._trusted(pts, window)


def thin(config: PointConfig, survival: float, rng: RngStream) -> PointConfig:
    """Independent thinning: each point kept with probability ``survival``."""
    if not 0.0 <= survival <= 1.0:
        raise ParameterError(f"survival must lie in [0, 1], got {survival}")
    keep = rng.generator().random(len(config)) < survival
    return PointConfig._trusted(config.points[keep], config.window)


def superpose(a: PointConfig, b: PointConfig) -> PointConfig:
    """Union of two configurations on the same window.

    Points of ``b`` coinciding exactly with a point of ``a`` are dropped.
    """
    if a.dimension != b.dimension or a.window != b.window:
        raise ParameterError("superpose needs equal dimensions and windows")
    if len(a) == 0:
        return b
    if len(b) == 0:
        return a
    pts = np.vstack([a.points, b.points])
    _, first = np.unique(pts, axis=0, return_index=True)
    if len(first) != len(pts):
        pts = pts[np.sort(first)]
    return PointConfig._trusted(pts, a.window)


def restrict(config: PointConfig, window: BoxWindow) -> PointConfig:
    """Points of ``config`` inside the closed box ``window``."""
    if window.dimension != config.dimension:
        raise ParameterError("window has wrong dimension")
    if not config.window.contains_window(window):
        raise ParameterError("restriction window must lie inside the configuration window")
    return PointConfig._trusted(config.points[window.contains(config.points)], window)
