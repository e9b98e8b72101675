import json

import numpy as np
import pytest

from lowertail import (BoxWindow, ParameterError, PointConfig, RngStream, check_increasing,
                       check_R_bounded, check_R_decreasing, check_rng_angles, check_weakly_decreasing,
                       parse_spec, run_suite)
from lowertail.lemmas import exceptional_set, knn_set, rng_angle_stats
from conftest import poisson_cfg


def cfg(*pts, side=8.0):
    return PointConfig(np.array(pts, dtype=float), BoxWindow(side))


class TestWeaklyDecreasing:
    def test_line_example(self):
        exc, ok = check_weakly_decreasing(parse_spec("knn:k=1,alpha=0"), cfg((0, 0), (1, 0), (2.1, 0)), (0.4, 0))
        assert len(exc) == 0 and ok

    def test_far_point(self):
        c = poisson_cfg(1, 6.0)
        for text in ("knn:k=2,alpha=1;range=2", "rng:alpha=1;range=2", "rgg:alpha=1,t=1"):
            exc = exceptional_set(parse_spec(text), c, (500.0, 500.0))
            assert len(exc) == 0

    def test_far_point_untruncated_stays_in_knn(self):
        # without a range the far point still links to its k nearest
        c = poisson_cfg(1, 6.0)
        exc, ok = check_weakly_decreasing(parse_spec("knn:k=2,alpha=1"), c, (500.0, 500.0))
        pts = np.vstack([c.points, (500.0, 500.0)])
        assert ok and set(exc.tolist()) <= set(knn_set(pts, len(pts) - 1, 2).tolist())

    def test_default_bounds(self):
        with pytest.raises(ParameterError):
            check_weakly_decreasing(parse_spec("rgg:alpha=0,t=1"), cfg((0, 0), (1, 0)), (0.5, 0.5))

    def test_undirected_counterexample(self):
        # y = (1, 0) gains x as its nearest neighbour but keeps z = (0, 0),
        # whose nearest neighbour it still is; w = (2.6, 0.3) gains x too
        c = cfg((0, 0), (1, 0), (2.6, 0.3), (2.6, 0.9))
        x = (1.95, 0.0)
        exc, ok = check_weakly_decreasing(parse_spec("knn:k=1,alpha=0"), c, x)
        assert exc.tolist() == [1, 2] and not ok
        pts = np.vstack([c.points, x])
        assert knn_set(pts, 4, 1).tolist() == [2]
        exc, ok = check_weakly_decreasing(parse_spec("knn:k=1,alpha=0,mode=bidirectional"), c, x)
        assert ok

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_bidirectional_contained(self, k):
        spec = parse_spec(f"knn:k={k},alpha=1,mode=bidirectional")
        rng = np.random.default_rng(k)
        for seed in range(15):
            c = poisson_cfg(50 + seed, 10.0)
            x = rng.uniform(-3, 3, 2)
            exc, ok = check_weakly_decreasing(spec, c, x)
            assert ok
            pts = np.vstack([c.points, x])
            assert set(exc.tolist()) <= set(knn_set(pts, len(pts) - 1, k).tolist())

    def test_rng_bounded_by_degree(self):
        spec = parse_spec("rng:alpha=0.5")
        rng = np.random.default_rng(0)
        for seed in range(15):
            c = poisson_cfg(80 + seed, 10.0)
            exc, ok = check_weakly_decreasing(spec, c, rng.uniform(-3, 3, 2))
            assert ok and len(exc) <= 6


class TestIncreasing:
    def test_inside_range(self):
        c = cfg((0, 0), (0.5, 0))
        assert check_increasing(parse_spec("rgg:alpha=1,t=1"), c, (0, 0.5))
        assert check_increasing(parse_spec("clique:k=3,t=1"), c, (0.25, 0.3))

    def test_rejects_other_scores(self):
        with pytest.raises(ParameterError):
            check_increasing(parse_spec("knn:k=1,alpha=1"), cfg((0, 0), (1, 0)), (0.5, 0))

    def test_sweep(self):
        rng = np.random.default_rng(3)
        for seed in range(20):
            c = poisson_cfg(seed, 8.0)
            assert check_increasing(parse_spec("rgg:alpha=0.5,t=1"), c, rng.uniform(-4, 4, 2))


class TestRadius:
    def test_empty_cone_becomes_finite(self):
        ang = np.pi * np.arange(12) / 6
        ring = np.c_[np.cos(ang), np.sin(ang)]
        c = PointConfig(np.vstack([[0, 0], ring[1:]]), BoxWindow(8.0))
        assert check_R_decreasing("voronoi", c, (1.0, 0.0))

    def test_far_duplicate_direction(self):
        ang = np.pi * np.arange(12) / 6
        c = PointConfig(np.vstack([[0, 0], np.c_[np.cos(ang), np.sin(ang)]]), BoxWindow(12.0))
        assert check_R_decreasing(("knn", 1), c, (5.0, 0.0))

    def test_bad_kind(self):
        with pytest.raises(ParameterError):
            check_R_decreasing("delaunay", cfg((0, 0), (1, 0)), (0.5, 0))

    def test_bounded_v1_analytic_threshold(self):
        # v1 <= pi R, so delta M^2 > pi M rules out violations once M > pi / delta
        r = check_R_bounded(parse_spec("voronoi:j=1"), "voronoi", 100, 1.0, [1, 2, 4, 6], RngStream(1))
        assert r.details["per_M"]["4.0"] == 0 and r.details["per_M"]["6.0"] == 0
        assert r.violations == 0

    def test_bounded_rejects_area(self):
        with pytest.raises(ParameterError):
            check_R_bounded(parse_spec("voronoi:j=2"), "voronoi", 10, 0.5, [2], RngStream(1))

    def test_bounded_knn_small_M_violates(self):
        r = check_R_bounded(parse_spec("knn:k=1,alpha=0"), ("knn", 1), 200, 0.5, [1, 2, 4], RngStream(2),
                            required_from=4)
        per_m = r.details["per_M"]
        assert per_m["1.0"] >= per_m["2.0"] >= per_m["4.0"] == 0
        assert r.passed


class TestAngles:
    def test_near_equilateral(self):
        # all three distances distinct
        c = cfg((0, 0), (1, 0), (0.5 + 3e-7, np.sqrt(3) / 2 - 1e-7))
        assert check_rng_angles(c)
        assert rng_angle_stats(c)[0] == pytest.approx(np.pi / 3, abs=1e-6)

    def test_two_points(self):
        assert check_rng_angles(cfg((0, 0), (1, 0)))

    def test_sweep(self):
        for seed in range(20):
            c = poisson_cfg(seed, 12.0)
            angle, degree = rng_angle_stats(c)
            assert angle >= np.pi / 3 - 1e-9 and degree <= 6


class TestSuite:
    def test_small_run(self):
        reports = run_suite(4, RngStream(3), ["increasing", "rng-angles"])
        assert [r.lemma_id for r in reports] == ["increasing[clique:k=3,t=1]", "increasing[rgg:alpha=1,t=1]",
                                                 "rng-angles"]
        assert all(r.passed for r in reports)
        assert json.loads(reports[0].to_json())["violations"] == 0

    def test_unknown_suite(self):
        with pytest.raises(ParameterError):
            run_suite(1, RngStream(0), ["nope"])

    def test_witness_replays(self):
        # the sweep finds undirected violations quickly; their witness must replay
        reports = run_suite(30, RngStream(1), ["weak-decreasing"])
        bad = [r for r in reports if r.violations]
        assert bad and all("undirected" in r.lemma_id for r in bad)
        for r in bad:
            spec = parse_spec(r.lemma_id[len("weakly-decreasing["):-1])
            w = r.worst_case
            again = exceptional_set(spec, PointConfig.from_text(w["config"]), w["x"])
            assert again.tolist() == w["exceptional"]
