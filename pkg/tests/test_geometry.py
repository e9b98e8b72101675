import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lowertail import (BoxWindow, ParameterError, PointConfig, RngStream, point_index, restrict,
                       sample_poisson, superpose, thin)
from oracles import chi_square_poisson


class TestRngStream:
    def test_same_stream_same_draws(self):
        a = RngStream(7, 3).generator().random(5)
        b = RngStream(7, 3).generator().random(5)
        assert np.array_equal(a, b)

    def test_children_differ(self):
        s = RngStream(7)
        assert s.child(0) != s.child(1)
        assert not np.array_equal(s.child(0).generator().random(4), s.child(1).generator().random(4))

    def test_child_is_pure(self):
        assert RngStream(1).child(5) == RngStream(1).child(5)

    def test_rejects_negative(self):
        with pytest.raises(ParameterError):
            RngStream(-1)


class TestWindow:
    def test_bounds(self):
        w = BoxWindow(4.0, 2, (1.0, 0.0))
        assert np.allclose(w.lo, [-1, -2]) and np.allclose(w.hi, [3, 2])
        assert w.volume == 16.0

    def test_closed(self):
        w = BoxWindow(2.0)
        assert w.contains([[1.0, -1.0]])[0]
        assert not w.contains([[1.0 + 1e-12, 0.0]])[0]

    @pytest.mark.parametrize("side", [0.0, -1.0, np.inf])
    def test_bad_side(self, side):
        with pytest.raises(ParameterError):
            BoxWindow(side)

    def test_bad_dimension(self):
        with pytest.raises(ParameterError):
            BoxWindow(1.0, 4)


class TestPointConfig:
    def test_rejects_duplicates(self):
        with pytest.raises(ParameterError):
            PointConfig(np.array([[0.0, 0.0], [0.0, 0.0]]))

    def test_rejects_nonfinite(self):
        with pytest.raises(ParameterError):
            PointConfig(np.array([[0.0, np.nan]]))

    def test_rejects_outside(self):
        with pytest.raises(ParameterError):
            PointConfig(np.array([[3.0, 0.0]]), BoxWindow(2.0))

    def test_default_window(self):
        c = PointConfig(np.array([[0.0, 0.0], [3.0, -1.0]]))
        assert c.window.side == 6.0

    def test_point_index(self):
        c = PointConfig(np.array([[0.0, 0.0], [1.0, 0.0]]))
        assert point_index(c, (1.0, 0.0)) == 1
        assert point_index(c, 0) == 0
        with pytest.raises(ParameterError):
            point_index(c, (0.5, 0.0))

    def test_text_header_with_center(self):
        c = PointConfig(np.array([[1.0, 1.5]]), BoxWindow(2.0, 2, (1.0, 1.0)))
        text = c.to_text()
        assert text.splitlines()[0] == "2 1 2.0 1.0 1.0"
        assert PointConfig.from_text(text) == c

    def test_text_count_mismatch(self):
        with pytest.raises(ParameterError):
            PointConfig.from_text("2 3 4.0\n0 0\n1 1\n")

    def test_json_bare_list(self):
        c = PointConfig.from_json("[[0, 0], [1, 0.5]]")
        assert len(c) == 2 and c.dimension == 2

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(0, 12), st.integers(1, 3)),
                  elements=st.floats(-50, 50, allow_nan=False), unique=True))
    def test_roundtrip(self, pts):
        pts = np.unique(pts, axis=0) if len(pts) else pts
        c = PointConfig(pts, BoxWindow(101.0, pts.shape[1]))
        assert PointConfig.from_text(c.to_text()) == c
        assert PointConfig.from_json(c.to_json()) == c


class TestSampling:
    def test_deterministic(self):
        a = sample_poisson(1.0, BoxWindow(5.0), RngStream(3, 1))
        b = sample_poisson(1.0, BoxWindow(5.0), RngStream(3, 1))
        assert a == b

    def test_inside_window(self):
        w = BoxWindow(3.0, 3, (1.0, 2.0, 3.0))
        c = sample_poisson(2.0, w, RngStream(1))
        assert np.all(w.contains(c.points))

    def test_counts_are_poisson(self):
        rng = RngStream(11)
        counts = [len(sample_poisson(1.0, BoxWindow(10.0), rng.child(i))) for i in range(3000)]
        assert abs(np.mean(counts) - 100) < 4 * 10 / np.sqrt(3000)
        assert chi_square_poisson(counts, 100.0)[1] > 1e-3

    def test_void_probability(self):
        rng = RngStream(12)
        empty = np.mean([len(sample_poisson(0.1, BoxWindow(2.0), rng.child(i))) == 0 for i in range(4000)])
        p = np.exp(-0.4)
        assert abs(empty - p) < 3 * np.sqrt(p * (1 - p) / 4000)

    def test_bad_intensity(self):
        with pytest.raises(ParameterError):
            sample_poisson(0.0, BoxWindow(1.0), RngStream(0))


class TestThinSuperposeRestrict:
    def test_thin_extremes(self):
        c = sample_poisson(1.0, BoxWindow(5.0), RngStream(0))
        assert thin(c, 1.0, RngStream(1)) == c
        assert len(thin(c, 0.0, RngStream(1))) == 0

    def test_thin_fraction(self):
        c = sample_poisson(100.0, BoxWindow(10.0), RngStream(0))
        kept = len(thin(c, 0.5, RngStream(2))) / len(c)
        assert abs(kept - 0.5) < 0.02

    def test_thin_range(self):
        with pytest.raises(ParameterError):
            thin(PointConfig(np.zeros((1, 2))), 1.5, RngStream(0))

    def test_superpose(self):
        w = BoxWindow(4.0)
        a = PointConfig(np.array([[0.0, 0.0]]), w)
        b = PointConfig(np.array([[1.0, 0.0]]), w)
        assert len(superpose(a, b)) == 2
        assert superpose(a, PointConfig(np.zeros((0, 2)), w)) == a

    def test_superpose_mismatch(self):
        with pytest.raises(ParameterError):
            superpose(PointConfig(np.zeros((1, 2)), BoxWindow(2.0)), PointConfig(np.zeros((1, 2)), BoxWindow(3.0)))

    def test_thin_plus_sprinkle_is_poisson(self):
        rng = RngStream(21)
        w = BoxWindow(5.0)
        counts = []
        for i in range(3000):
            s = rng.child(i)
            base = sample_poisson(1.0, w, s.child(0))
            counts.append(len(superpose(thin(base, 0.9, s.child(1)), sample_poisson(0.1, w, s.child(2)))))
        assert chi_square_poisson(counts, 25.0)[1] > 1e-3

    def test_restrict(self):
        c = PointConfig(np.array([[0.0, 0.0], [3.0, 3.0]]))
        r = restrict(c, BoxWindow(2.0))
        assert r.points.tolist() == [[0.0, 0.0]]
        assert restrict(c, c.window) == c

    def test_restrict_nested(self):
        c = sample_poisson(1.0, BoxWindow(10.0), RngStream(4))
        assert restrict(restrict(c, BoxWindow(6.0)), BoxWindow(3.0)) == restrict(c, BoxWindow(3.0))
