"""Crude Monte Carlo for lower-tail probabilities of H_n.

Trial ``i`` always draws from ``rng.child(i)``, so estimates are identical
whatever the worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.stats import binomtest

from ._parallel import map_trials
from .errors import InfeasibleSweepError, ParameterError, RareEventExhaustion
from .geometry import BoxWindow, PointConfig, RngStream, sample_poisson
from .scores import ScoreSpec, format_spec, h_n, score_all

__all__ = [
    "TailEstimate",
    "ConditionedSample",
    "sample_h",
    "h_samples",
    "estimate_tail",
    "rate_curve",
    "conditional_sample",
    "wilson_interval",
    "tail_csv",
]

MAX_FLAGGED_FRACTION = 1e-3


def wilson_interval(hits: int, trials: int, level: float = 0.95):
    ci = binomtest(int(hits), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class TailEstimate:
    spec: str
    n: float
    a: float
    trials: int
    hits: int
    p_hat: float
    ci95: tuple
    empirical_rate: float
    seed: tuple
    strict: bool = True
    flagged_fraction: float = 0.0
    reliable: bool = True
    margin: float = 0.0
    d: int = 2

    def to_json(self) -> str:
        obj = dict(self.__dict__)
        obj["ci95"] = list(self.ci95)
        obj["seed"] = list(self.seed)
        if obj["empirical_rate"] is None or not math.isfinite(obj["empirical_rate"]):
            obj["empirical_rate"] = None
        return json.dumps(obj)


@dataclass
class ConditionedSample:
    config: PointConfig
    h_value: float
    attempts: int
    a: float = field(default=float("nan"))

    def to_json(self) -> str:
        return json.dumps({"h_value": self.h_value, "attempts": self.attempts, "a": self.a,
                           "config": json.loads(self.config.to_json())})


def sample_h(spec: ScoreSpec, n: float, margin: float, rng: RngStream, d: int = 2,
             intensity: float = 1.0):
    """One draw of H_n: ``(value, flagged, scored, config)``."""
    outer = BoxWindow(n + 2 * margin, d)
    config = sample_poisson(intensity, outer, rng)
    scored = score_all(spec, config, BoxWindow(n, d))
    return h_n(scored), scored.n_flagged, len(scored.indices), config


def _h_trial(spec, n, margin, d, rng, i):
    value, flagged, scored, _ = sample_h(spec, n, margin, rng.child(i), d)
    return value, flagged, scored


def h_samples(spec: ScoreSpec, n: float, margin: float, trials: int, rng: RngStream,
              d: int = 2, workers=1):
    """Arrays of H_n values, flagged counts and scored counts over ``trials`` draws."""
    res = map_trials(partial(_h_trial, spec, n, margin, d, rng), trials, workers)
    arr = np.array(res, dtype=float).reshape(-1, 3)
    return arr[:, 0], arr[:, 1].astype(np.int64), arr[:, 2].astype(np.int64)


def _estimate_from(spec, n, a, margin, rng, strict, d, values, flagged, scored):
    trials = len(values)
    hits = int(np.count_nonzero(values < a if strict else values <= a))
    p_hat = hits / trials
    frac = float(flagged.sum() / scored.sum()) if scored.sum() else 0.0
    rate = math.log(1 / p_hat) / n ** d if hits > 0 else None
    return TailEstimate(format_spec(spec), float(n), float(a), trials, hits, p_hat,
                        wilson_interval(hits, trials), rate, (rng.seed, rng.stream_id),
                        strict, frac, frac <= MAX_FLAGGED_FRACTION, float(margin), d)


def estimate_tail(spec: ScoreSpec, n: float, a: float, margin: float, trials: int,
                  rng: RngStream, strict: bool = True, d: int = 2, workers=1) -> TailEstimate:
    """Estimate P(H_n < a) (or <= a when ``strict`` is False) from i.i.d. draws."""
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    if a < 0:
        raise ParameterError("level a must be nonnegative")
    if not n > 0 or margin < 0:
        raise ParameterError("need n > 0 and margin >= 0")
    values, flagged, scored = h_samples(spec, n, margin, trials, rng, d, workers)
    return _estimate_from(spec, n, a, margin, rng, strict, d, values, flagged, scored)


def rate_curve(spec: ScoreSpec, a: float, n_list, margin: float, trials: int = None,
               rng: RngStream = None, min_hits: float = 10, target_hits: float = None,
               max_trials: int = 10 ** 6, strict: bool = True, d: int = 2, workers=1) -> list:
    """One tail estimate per window side in ``n_list``.

    A pilot run (1% of ``trials``, at least 200 draws) at the largest ``n``
    must project at least ``min_hits`` hits.  With ``target_hits`` set, each
    ``n`` gets its own pilot and enough trials for that many expected hits
    (capped at ``max_trials``).
    """
    rng = RngStream(0) if rng is None else rng
    n_list = [float(v) for v in n_list]
    if not n_list:
        raise ParameterError("n_list must not be empty")
    if trials is None and target_hits is None:
        raise ParameterError("give trials or target_hits")
    pilot_rng = rng.child(1 << 32)

    def pilot(n, size):
        est = estimate_tail(spec, n, a, margin, size, pilot_rng.child(int(n * 1000)), strict, d, workers)
        return (est.hits + 0.5) / (size + 1)

    out = []
    if target_hits is None:
        n_big = max(n_list)
        size = max(200, trials // 100)
        projected = pilot(n_big, size) * trials
        if projected < min_hits:
            raise InfeasibleSweepError(
                f"pilot projects {projected:.2f} hits at n={n_big} with {trials} trials", projected)
        for pos, n in enumerate(n_list):
            out.append(estimate_tail(spec, n, a, margin, trials, rng.child(pos), strict, d, workers))
        return out
    for pos, n in enumerate(n_list):
        size = 200 if trials is None else max(200, trials // 100)
        p = pilot(n, size)
        need = int(math.ceil(target_hits / p))
        if need > max_trials:
            raise InfeasibleSweepError(
                f"n={n} needs about {need} trials for {target_hits} hits", p * max_trials)
        out.append(estimate_tail(spec, n, a, margin, need, rng.child(pos), strict, d, workers))
    return out


def tail_csv(estimates) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "a", "trials", "hits", "p_hat", "ci_lo", "ci_hi", "rate"])
    for e in estimates:
        rate = "" if e.empirical_rate is None else repr(e.empirical_rate)
        w.writerow([repr(e.n), repr(e.a), e.trials, e.hits, repr(e.p_hat),
                    repr(e.ci95[0]), repr(e.ci95[1]), rate])
    return buf.getvalue()


def conditional_sample(spec: ScoreSpec, n: float, a: float, margin: float, max_attempts: int,
                       rng: RngStream, d: int = 2) -> ConditionedSample:
    """Rejection-sample a configuration with H_n < a."""
    if max_attempts < 1:
        raise ParameterError("max_attempts must be at least 1")
    best, best_value = None, float("inf")
    for attempt in range(max_attempts):
        value, _, _, config = sample_h(spec, n, margin, rng.child(attempt), d)
        if value < a:
            return ConditionedSample(config, value, attempt + 1, float(a))
        if value < best_value:
            best, best_value = config, value
    raise RareEventExhaustion(f"no draw with H_n < {a} in {max_attempts} attempts",
                              best, best_value, max_attempts)
