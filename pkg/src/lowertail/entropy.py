"""Entropy upper bound on the lower-tail rate over homogeneous Poisson processes.

Among stationary processes, Poisson(lambda) has specific relative entropy
``lambda log lambda - lambda + 1`` against the unit Poisson process.  Any
lambda whose mean score density lies below the level ``a`` is feasible, so
the smallest such entropy upper-bounds the rate.  For increasing scores the
mean density ``m(lambda)`` increases, and the optimum is the root of
``m(lambda) = a`` below 1, located by bisection on Monte Carlo estimates.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np
from scipy import stats

from ._parallel import map_trials
from .errors import BracketError, ParameterError, UnstabilizedError
from .geometry import BoxWindow, PointConfig, RngStream
from .scores import ScoreSpec, is_increasing, score_all

__all__ = [
    "EntropyBound",
    "h_poisson",
    "entropy_by_likelihood_ratio",
    "palm_mean_mc",
    "rate_upper_bound",
]

MAX_FLAGGED_FRACTION = 1e-3


def h_poisson(lam: float) -> float:
    """Specific relative entropy of Poisson(lam) with respect to Poisson(1)."""
    if not lam > 0:
        raise ParameterError(f"intensity must be positive, got {lam}")
    return float(lam * np.log(lam) - lam + 1)


def entropy_by_likelihood_ratio(lam: float, volume: float = 1.0) -> float:
    """E_lam[log dP_lam/dP_1] / volume, summed directly over the Poisson counts.

    On a box of volume V the likelihood ratio of Poisson(lam) against
    Poisson(1) is exp((1 - lam) V) lam^N with N the point count.
    """
    if not lam > 0:
        raise ParameterError(f"intensity must be positive, got {lam}")
    mean = lam * volume
    # the neglected upper tail is far below double precision
    n = np.arange(int(mean + 40 * np.sqrt(mean)) + 60)
    pmf = stats.poisson.pmf(n, mean)
    log_lr = (1 - lam) * volume + n * np.log(lam)
    return float(np.sum(pmf * log_lr) / volume)


def _trial_sum(spec, lam, lam_max, side, margin, d, rng, i):
    """Score sum over the scoring box in one sample, and (flagged, scored) counts."""
    outer = BoxWindow(side + 2 * margin, d)
    gen = rng.child(i).generator()
    top = lam if lam_max is None else lam_max
    n = gen.poisson(top * outer.volume)
    pts = outer.lo + outer.side * gen.random((n, d))
    if lam_max is not None:
        # common random numbers: thin a dominating process by uniform marks
        pts = pts[gen.random(n) * lam_max < lam]
    scored = score_all(spec, PointConfig._trusted(pts, outer), BoxWindow(side, d))
    return float(np.nansum(scored.per_point_scores)), scored.n_flagged, len(scored.indices)


def _palm_batch(spec, lam, margin, trials, rng, d, side, lam_max, workers):
    func = partial(_trial_sum, spec, lam, lam_max, side, margin, d, rng)
    res = map_trials(func, trials, workers)
    sums = np.array([r[0] for r in res]) / side ** d
    flagged = sum(r[1] for r in res)
    scored = sum(r[2] for r in res)
    if scored and flagged / scored > MAX_FLAGGED_FRACTION:
        raise UnstabilizedError(
            f"{flagged} of {scored} scored points reach beyond the margin {margin}; increase it")
    se = float(np.std(sums, ddof=1) / np.sqrt(trials)) if trials > 1 else float("inf")
    return float(np.mean(sums)), se


def palm_mean_mc(spec: ScoreSpec, lam: float, margin: float, trials: int, rng: RngStream,
                 d: int = 2, normalized: bool = False, scoring_side: float = 1.0,
                 workers=1):
    """Monte Carlo mean score mass per unit volume at intensity ``lam``.

    Each trial samples Poisson(lam) in the box of side ``scoring_side + 2*margin``
    and sums the scores of the points in the central box of side
    ``scoring_side``.  With ``normalized=True`` the result is divided by
    ``lam`` (probability-normalised Palm mean).  Returns ``(mean, stderr)``.
    """
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    if not lam > 0:
        raise ParameterError("intensity must be positive")
    if not margin >= 0:
        raise ParameterError("margin must be nonnegative")
    mean, se = _palm_batch(spec, lam, margin, trials, rng, d, scoring_side, None, workers)
    if normalized:
        return mean / lam, se / lam
    return mean, se


@dataclass
class EntropyBound:
    a: float
    lambda_star: float
    palm_mean_at_star: float
    bound: float
    mc_error: float
    bound_stderr: float
    trials: int
    method: str = "bisection"
    evaluations: int = 0

    def to_json(self) -> str:
        return json.dumps({"a": self.a, "lambda_star": self.lambda_star, "m": self.palm_mean_at_star,
                           "bound": self.bound, "stderr": self.bound_stderr, "mc_error": self.mc_error,
                           "trials": self.trials, "method": self.method})

    def as_dict(self) -> dict:
        return asdict(self)


def rate_upper_bound(spec: ScoreSpec, a: float, lambda_bracket=(0.05, 1.0), trials: int = 2000,
                     rng: RngStream = None, margin: float = 3.0, d: int = 2,
                     scoring_side: float = 1.0, lambda_tol: float = 1e-3,
                     grid_points: int = 41, workers=1) -> EntropyBound:
    """Smallest Poisson-family entropy subject to mean score density below ``a``.

    Estimates at different intensities share random numbers (thinning of one
    dominating process), so for increasing scores the estimated curve is
    monotone.  Bisection stops when the bracket is narrower than
    ``lambda_tol`` or the estimate at the midpoint is within one standard
    error of ``a``.  Scores not known to be increasing, or estimates that
    break monotonicity beyond noise, fall back to a grid scan.
    """
    if not a > 0:
        raise ParameterError("level a must be positive")
    lo, hi = map(float, lambda_bracket)
    if not 0 < lo < hi:
        raise ParameterError("bracket must satisfy 0 < lo < hi")
    rng = RngStream(0) if rng is None else rng
    lam_max = hi
    evals = 0

    def m(lam):
        nonlocal evals
        evals += 1
        return _palm_batch(spec, lam, margin, trials, rng, d, scoring_side, lam_max, workers)

    def finish(lam, m_val, se, slope, method):
        lam_se = se / slope if slope > 0 else float("inf")
        return EntropyBound(a, lam, m_val, h_poisson(lam), se, float(abs(np.log(lam)) * lam_se) if lam != 1.0 else 0.0,
                            trials, method, evals)

    increasing = is_increasing(spec)
    if increasing and lo < 1 < hi:
        # the unconstrained minimiser lambda = 1 may already be feasible
        m_one, se_one = m(1.0)
        if m_one <= a:
            return finish(1.0, m_one, se_one, 0.0, "typical")
        hi = 1.0
    m_lo, se_lo = m(lo)
    m_hi, se_hi = m(hi)
    if increasing and m_hi <= a and hi == 1.0:
        return finish(1.0, m_hi, se_hi, 0.0, "typical")
    if not (m_lo < a < m_hi):
        raise BracketError(f"level {a} not bracketed: m({lo})={m_lo:.6g}, m({hi})={m_hi:.6g}")

    if increasing:
        slope0 = (m_hi - m_lo) / (hi - lo)
        while hi - lo >= lambda_tol:
            mid = 0.5 * (lo + hi)
            m_mid, se_mid = m(mid)
            if m_mid < m_lo - 2 * se_lo or m_mid > m_hi + 2 * se_hi:
                break
            if abs(m_mid - a) < se_mid:
                slope = (m_hi - m_lo) / (hi - lo) if m_hi > m_lo else slope0
                return finish(mid, m_mid, se_mid, slope, "bisection")
            if m_mid < a:
                lo, m_lo, se_lo = mid, m_mid, se_mid
            else:
                hi, m_hi, se_hi = mid, m_mid, se_mid
        else:
            mid = 0.5 * (lo + hi)
            m_mid, se_mid = m(mid)
            slope = (m_hi - m_lo) / (hi - lo) if m_hi > m_lo else slope0
            return finish(mid, m_mid, se_mid, slope, "bisection")

    # grid scan: feasible intensity with the smallest entropy
    lo, hi = map(float, lambda_bracket)
    grid = np.linspace(lo, hi, grid_points)
    est = [m(lam) for lam in grid]
    means = np.array([e[0] for e in est])
    feasible = means < a
    if not np.any(feasible):
        raise BracketError(f"no intensity in [{lo}, {hi}] has mean score density below {a}")
    ent = np.array([h_poisson(lam) for lam in grid])
    best = int(np.argmin(np.where(feasible, ent, np.inf)))
    slope = abs(np.gradient(means, grid)[best])
    return finish(float(grid[best]), float(means[best]), est[best][1], slope, "grid")
