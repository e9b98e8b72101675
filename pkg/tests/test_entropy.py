import math

import numpy as np
import pytest

from lowertail import (BracketError, ParameterError, RngStream, UnstabilizedError,
                       entropy_by_likelihood_ratio, h_poisson, palm_mean_mc, parse_spec, rate_upper_bound)

RGG = parse_spec("rgg:alpha=0,t=1")


@pytest.mark.parametrize("lam,value", [(1.0, 0.0), (2.0, 0.386294361119891), (0.5, 0.1534264097200273)])
def test_closed_form(lam, value):
    assert h_poisson(lam) == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("lam", [0.1, 0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("volume", [1.0, 3.0])
def test_likelihood_ratio_oracle(lam, volume):
    assert abs(h_poisson(lam) - entropy_by_likelihood_ratio(lam, volume)) < 1e-10


def test_nonpositive():
    with pytest.raises(ParameterError):
        h_poisson(0.0)


def test_palm_mean_small():
    m, se = palm_mean_mc(RGG, 1.0, 1.0, 300, RngStream(1), scoring_side=6.0)
    assert abs(m - math.pi / 2) < 4 * se


def test_palm_normalized():
    a = palm_mean_mc(RGG, 0.5, 1.0, 50, RngStream(2), scoring_side=4.0)
    b = palm_mean_mc(RGG, 0.5, 1.0, 50, RngStream(2), scoring_side=4.0, normalized=True)
    assert b[0] == pytest.approx(a[0] / 0.5)


def test_palm_sparse_pairs():
    m, _ = palm_mean_mc(parse_spec("clique:k=2,t=1"), 1e-4, 1.0, 50, RngStream(3), scoring_side=4.0)
    assert m == 0.0


def test_palm_flags_thin_margin():
    with pytest.raises(UnstabilizedError):
        palm_mean_mc(parse_spec("voronoi:j=2"), 1.0, 0.5, 20, RngStream(4), scoring_side=3.0)


def test_palm_workers_agree():
    a = palm_mean_mc(RGG, 1.0, 1.0, 40, RngStream(5), scoring_side=3.0, workers=1)
    b = palm_mean_mc(RGG, 1.0, 1.0, 40, RngStream(5), scoring_side=3.0, workers=2)
    assert a == b


def test_bound_small_run():
    b = rate_upper_bound(RGG, math.pi / 4, trials=300, rng=RngStream(6), margin=1.0, scoring_side=8.0)
    assert b.method == "bisection"
    assert abs(b.lambda_star - 2 ** -0.5) < 0.03
    assert b.bound == pytest.approx(h_poisson(b.lambda_star))
    assert abs(b.palm_mean_at_star - b.a) < 4 * b.mc_error


def test_bound_typical_level():
    m, se = palm_mean_mc(RGG, 1.0, 1.0, 100, RngStream(7), scoring_side=6.0)
    b = rate_upper_bound(RGG, m + 3 * se, trials=100, rng=RngStream(8), margin=1.0, scoring_side=6.0)
    assert b.lambda_star == 1.0 and b.bound == 0.0


def test_bracket_error():
    with pytest.raises(BracketError):
        rate_upper_bound(RGG, 1e-4, (0.2, 1.0), trials=50, rng=RngStream(9), margin=1.0, scoring_side=4.0)


def test_grid_fallback_for_non_increasing():
    # mean v1 density is 2 sqrt(lambda): level 1.9 sits inside the bracket
    spec = parse_spec("voronoi:j=1")
    b = rate_upper_bound(spec, 1.9, (0.7, 1.5), trials=10, rng=RngStream(10), margin=12.0,
                         scoring_side=2.0, grid_points=9)
    assert b.method == "grid"
    assert b.palm_mean_at_star < 1.9 and b.lambda_star < 1.0


def test_json():
    b = rate_upper_bound(RGG, math.pi / 4, trials=50, rng=RngStream(6), margin=1.0, scoring_side=4.0)
    assert '"lambda_star"' in b.to_json()
