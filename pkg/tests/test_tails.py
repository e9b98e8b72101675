import json
import math

import numpy as np
import pytest

from lowertail import (InfeasibleSweepError, ParameterError, RareEventExhaustion, RngStream,
                       conditional_sample, estimate_tail, parse_spec, rate_curve)
from lowertail.tails import tail_csv, wilson_interval

RGG = parse_spec("rgg:alpha=0,t=1")


def test_wilson_matches_formula():
    lo, hi = wilson_interval(30, 100)
    z = 1.959963984540054
    p = 0.3
    center = (p + z * z / 200) / (1 + z * z / 100)
    half = z * math.sqrt(p * (1 - p) / 100 + z * z / 40000) / (1 + z * z / 100)
    assert lo == pytest.approx(center - half, rel=1e-9) and hi == pytest.approx(center + half, rel=1e-9)


def test_huge_level():
    e = estimate_tail(RGG, 3.0, 1e9, 1.0, 50, RngStream(1))
    assert e.p_hat == 1.0 and e.empirical_rate == 0.0
    assert e.ci95[1] == pytest.approx(1.0)


def test_zero_level_strict():
    e = estimate_tail(RGG, 3.0, 0.0, 1.0, 50, RngStream(1))
    assert e.hits == 0 and e.empirical_rate is None
    assert json.loads(e.to_json())["empirical_rate"] is None


def test_non_strict_counts_ties():
    spec = parse_spec("clique:k=2,t=1e-9")
    assert estimate_tail(spec, 3.0, 0.0, 1.0, 20, RngStream(2), strict=False).p_hat == 1.0


def test_exact_small_case():
    spec = parse_spec("rgg:alpha=0,t=3;range=3")
    e = estimate_tail(spec, 1.0, 1.0, 0.0, 20000, RngStream(3))
    p = 2 * math.exp(-1)
    assert abs(e.p_hat - p) < 4 * math.sqrt(p * (1 - p) / 20000)
    assert e.ci95[0] < p < e.ci95[1] or abs(e.p_hat - p) < 4 * math.sqrt(p * (1 - p) / 20000)


def test_worker_independence():
    a = estimate_tail(RGG, 3.0, 1.2, 1.0, 60, RngStream(4), workers=1)
    b = estimate_tail(RGG, 3.0, 1.2, 1.0, 60, RngStream(4), workers=3)
    assert a.to_json() == b.to_json()


def test_parameters():
    with pytest.raises(ParameterError):
        estimate_tail(RGG, 3.0, -1.0, 1.0, 10, RngStream(0))
    with pytest.raises(ParameterError):
        estimate_tail(RGG, 3.0, 1.0, 1.0, 0, RngStream(0))


def test_unreliable_when_margin_thin():
    e = estimate_tail(parse_spec("voronoi:j=2"), 3.0, 1.0, 0.5, 5, RngStream(5))
    assert not e.reliable and e.flagged_fraction > 1e-3


def test_rate_curve_constant_zero():
    spec = parse_spec("clique:k=2,t=1e-9")
    out = rate_curve(spec, 0.5, [2, 3], 0.0, trials=200, rng=RngStream(6))
    assert [e.p_hat for e in out] == [1.0, 1.0] and [e.empirical_rate for e in out] == [0.0, 0.0]


def test_rate_curve_pilot_refuses():
    with pytest.raises(InfeasibleSweepError) as info:
        rate_curve(RGG, 0.2, [2, 8], 1.0, trials=500, rng=RngStream(7))
    assert info.value.projected_hits < 10


def test_rate_curve_target_hits():
    out = rate_curve(RGG, 1.2, [2, 3], 1.0, rng=RngStream(8), target_hits=20)
    assert all(e.hits > 0 for e in out)
    csv = tail_csv(out)
    assert csv.splitlines()[0] == "n,a,trials,hits,p_hat,ci_lo,ci_hi,rate"
    assert len(csv.splitlines()) == 3


def test_conditional_sample():
    s = conditional_sample(RGG, 4.0, 1e9, 1.0, 5, RngStream(9))
    assert s.attempts == 1
    s = conditional_sample(RGG, 4.0, 1.2, 1.0, 500, RngStream(9))
    assert s.h_value < 1.2 and s.attempts >= 1


def test_conditional_exhaustion():
    with pytest.raises(RareEventExhaustion) as info:
        conditional_sample(RGG, 4.0, 0.0, 1.0, 8, RngStream(10))
    assert info.value.attempts == 8 and info.value.best is not None
    assert info.value.best_value >= 0


def test_attempts_follow_geometric_law():
    a = 0.75 * math.pi / 2
    p = estimate_tail(RGG, 6.0, a, 1.0, 2000, RngStream(11)).p_hat
    attempts = [conditional_sample(RGG, 6.0, a, 1.0, 10000, RngStream(12).child(i)).attempts for i in range(100)]
    assert 0.5 < np.mean(attempts) * p < 2.0
