import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull, Voronoi

from lowertail import (BoxWindow, ConvexPolygon, Graph, ParameterError, PointConfig,
                       UnboundedCellError, clique_count_at, intrinsic_volumes_2d, knn_graph,
                       knn_radius, rng_graph, voronoi_cell)
from lowertail.errors import InsufficientPointsError
from lowertail.graphs import clique_counts, knn_radii, rng_edges
from conftest import poisson_cfg
import oracles

pts_strategy = st.integers(0, 10 ** 6).map(lambda s: poisson_cfg(s, 5.0).points)


def cfg(*pts):
    return PointConfig(np.array(pts, dtype=float))


class TestKnnRadius:
    def test_examples(self):
        assert knn_radius(cfg((0, 0), (1, 0), (2, 0), (3, 0)), (0, 0), 2) == 2.0
        assert knn_radius(cfg((0, 0), (0.5, 0)), (0, 0), 1) == 0.5
        assert knn_radius(cfg((0, 0), (1, 0)), (0, 0), 3) == np.inf

    def test_missing_center(self):
        with pytest.raises(ParameterError):
            knn_radius(cfg((0, 0), (1, 0)), (2, 0), 1)

    @settings(max_examples=30, deadline=None)
    @given(pts_strategy, st.integers(1, 4))
    def test_matches_sorting(self, pts, k):
        if len(pts) <= k:
            return
        got = knn_radii(pts, k)
        want = [oracles.knn_radius(pts, i, k) for i in range(len(pts))]
        assert np.allclose(got, want, rtol=0, atol=1e-12)


class TestKnnGraph:
    def test_line_undirected(self):
        g = knn_graph(cfg((0, 0), (1, 0), (3, 0)), 1, "undirected")
        assert g.edge_set() == {(0, 1), (1, 2)}

    def test_line_bidirectional(self):
        g = knn_graph(cfg((0, 0), (1, 0), (3, 0)), 1, "bidirectional")
        assert g.edge_set() == {(0, 1)}

    def test_complete_when_k_large(self):
        g = knn_graph(cfg((0, 0), (1, 0), (3, 0), (0, 2)), 3, "undirected")
        assert len(g.edge_set()) == 6

    def test_insufficient(self):
        with pytest.raises(InsufficientPointsError):
            knn_graph(cfg((0, 0), (1, 0)), 2)

    def test_bad_mode(self):
        with pytest.raises(ParameterError):
            knn_graph(cfg((0, 0), (1, 0)), 1, "sideways")

    @settings(max_examples=30, deadline=None)
    @given(pts_strategy, st.integers(1, 3), st.sampled_from(["undirected", "bidirectional"]))
    def test_matches_definition(self, pts, k, mode):
        if len(pts) <= k:
            return
        g = knn_graph(PointConfig(pts, BoxWindow(5.0)), k, mode)
        assert g.edge_set() == oracles.knn_edge_set(pts, k, mode)

    def test_graph_json(self):
        g = knn_graph(cfg((0, 0), (1, 0), (3, 0)), 1)
        assert Graph.from_json(g.to_json()) == g


class TestRng:
    def test_two_points(self):
        assert rng_graph(cfg((0, 0), (1, 0))).edge_set() == {(0, 1)}

    def test_blocked(self):
        g = rng_graph(cfg((0, 0), (1, 0), (0.5, 0.1)))
        assert g.edge_set() == {(0, 2), (1, 2)}

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_delaunay_path_matches_definition(self, seed):
        pts = poisson_cfg(seed, 12.0).points  # > 64 points: uses the Delaunay filter
        got = {tuple(e) for e in rng_edges(pts).tolist()}
        assert got == oracles.rng_edge_set(pts)

    def test_one_dimensional(self):
        pts = np.array([[0.0], [2.0], [0.5]])
        assert {tuple(e) for e in rng_edges(pts).tolist()} == {(0, 2), (1, 2)}


class TestCliques:
    def test_examples(self):
        assert clique_count_at(cfg((0, 0), (0.5, 0)), (0, 0), 2, 1.0) == 1
        assert clique_count_at(cfg((0, 0), (0.5, 0), (0.25, 0.4)), (0, 0), 3, 1.0) == 1
        assert clique_count_at(cfg((0, 0), (2, 0)), (0, 0), 2, 1.0) == 0

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(2, 4))
    def test_matches_subsets(self, seed, k):
        pts = poisson_cfg(seed, 3.0, 3.0).points
        got = clique_counts(pts, np.arange(len(pts)), k, 1.0)
        want = [oracles.clique_score(pts, i, k, 1.0) * k for i in range(len(pts))]
        assert np.array_equal(got, want)


class TestVoronoi:
    def test_square(self, cross):
        cell = voronoi_cell(cross, (0, 0), 10.0)
        assert cell.bounded
        assert intrinsic_volumes_2d(cell) == pytest.approx((1.0, 4.0, 4.0))
        assert np.allclose(sorted(map(tuple, np.round(cell.vertices, 12))),
                           [(-1, -1), (-1, 1), (1, -1), (1, 1)])

    def test_half_plane(self):
        cell = voronoi_cell(cfg((0, 0), (2, 0)), (0, 0), 10.0)
        assert not cell.bounded
        with pytest.raises(UnboundedCellError):
            intrinsic_volumes_2d(cell)

    def test_bad_clip(self, cross):
        with pytest.raises(ParameterError):
            voronoi_cell(cross, (0, 0), 0.0)

    def test_counter_clockwise(self, cross):
        v = voronoi_cell(cross, (0, 0), 10.0).vertices
        x, y = v[:, 0], v[:, 1]
        assert np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0

    def test_disk_polygon(self):
        ang = 2 * np.pi * np.arange(720) / 720
        v = intrinsic_volumes_2d(ConvexPolygon(np.c_[np.cos(ang), np.sin(ang)], True))
        assert v[0] == 1 and abs(v[1] - np.pi) < 1e-3 and abs(v[2] - np.pi) < 1e-3

    def test_degenerate(self):
        with pytest.raises(UnboundedCellError):
            intrinsic_volumes_2d(ConvexPolygon(np.array([[0.0, 0.0], [1.0, 0.0]]), True))

    def test_matches_qhull(self):
        c = poisson_cfg(8, 14.0)
        vor = Voronoi(c.points)
        inner = np.flatnonzero(BoxWindow(6.0).contains(c.points))
        for i in inner:
            region = vor.regions[vor.point_region[i]]
            assert -1 not in region
            want = ConvexHull(vor.vertices[region]).volume
            got = intrinsic_volumes_2d(voronoi_cell(c, int(i), 20.0))[2]
            assert got == pytest.approx(want, rel=1e-9)

    def test_cells_tile(self):
        c = poisson_cfg(9, 16.0)
        inner = BoxWindow(6.0)
        cell_sum = 0.0
        for i in np.flatnonzero(inner.contains(c.points)):
            cell_sum += intrinsic_volumes_2d(voronoi_cell(c, int(i), 20.0))[2]
        # boundary cells straddle the box; the mismatch scales with its perimeter
        assert abs(cell_sum - 36.0) < 24 * 1.0

    def test_polygon_json(self, cross):
        cell = voronoi_cell(cross, (0, 0), 10.0)
        back = ConvexPolygon.from_json(cell.to_json())
        assert np.allclose(back.vertices, cell.vertices) and back.bounded
