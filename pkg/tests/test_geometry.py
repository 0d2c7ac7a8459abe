"""Communication graph and Gabriel reduction against brute-force oracles."""

import math

import numpy as np
import pytest

from steinerswarm.geometry import (
    CommGraph,
    Vec2,
    build_comm_graph,
    gabriel_reduce,
    padded_neighbors,
)

RANGE = 1.2
BODY_RADIUS = 0.05


def segment_distance(p, a, b):
    ab = b - a
    denom = max(float(np.dot(ab, ab)), 1e-300)
    t = min(1.0, max(0.0, float(np.dot(p - a, ab)) / denom))
    return float(np.linalg.norm(a + t * ab - p))


def brute_force_graph(pts, alive, range_, body_radius):
    n = len(pts)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if not (alive[i] and alive[j]):
                continue
            if np.linalg.norm(pts[i] - pts[j]) > range_:
                continue
            occluded = any(
                segment_distance(pts[w], pts[i], pts[j]) < body_radius
                for w in range(n)
                if w not in (i, j) and alive[w]
            )
            if not occluded:
                adj[i, j] = adj[j, i] = True
    return adj


def brute_force_gabriel(pts, alive, adj):
    n = len(pts)
    gab = adj.copy()
    for i in range(n):
        for j in range(i + 1, n):
            if not adj[i, j]:
                continue
            mid = 0.5 * (pts[i] + pts[j])
            rad2 = float(np.dot(pts[i] - mid, pts[i] - mid))
            for w in range(n):
                if w in (i, j) or not alive[w]:
                    continue
                off = pts[w] - mid
                if float(np.dot(off, off)) < rad2:
                    gab[i, j] = gab[j, i] = False
                    break
    return gab


class TestVec2:
    def test_arithmetic(self):
        v = Vec2(3.0, 4.0)
        assert (v + Vec2(1.0, -1.0)) == Vec2(4.0, 3.0)
        assert (v - Vec2(3.0, 4.0)) == Vec2(0.0, 0.0)
        assert v * 2.0 == Vec2(6.0, 8.0)
        assert v.norm() == pytest.approx(5.0)

    def test_normalized(self):
        assert Vec2(0.0, 2.0).normalized() == Vec2(0.0, 1.0)
        assert Vec2(0.0, 0.0).normalized() == Vec2(0.0, 0.0)

    def test_rotated_quarter_turn(self):
        r = Vec2(1.0, 0.0).rotated(math.pi / 2.0)
        assert r.x == pytest.approx(0.0, abs=1e-15)
        assert r.y == pytest.approx(1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Vec2(float("nan"), 0.0)
        with pytest.raises(ValueError):
            Vec2(0.0, float("inf"))


class TestCommGraph:
    def test_pair_within_range(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0]])
        g = build_comm_graph(pts, np.array([True, True]), RANGE, BODY_RADIUS)
        assert g.adjacency[0, 1] and g.adjacency[1, 0]

    def test_pair_beyond_range(self):
        pts = np.array([[0.0, 0.0], [1.21, 0.0]])
        g = build_comm_graph(pts, np.array([True, True]), RANGE, BODY_RADIUS)
        assert not g.adjacency.any()

    def test_collinear_blocker(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]])
        g = build_comm_graph(pts, np.ones(3, dtype=bool), RANGE, BODY_RADIUS)
        assert not g.adjacency[0, 1]
        assert g.adjacency[0, 2] and g.adjacency[2, 1]

    def test_tangent_body_does_not_occlude(self):
        # body circle touching the segment exactly is not strict occlusion
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, BODY_RADIUS]])
        g = build_comm_graph(pts, np.ones(3, dtype=bool), RANGE, BODY_RADIUS)
        assert g.adjacency[0, 1]

    def test_dead_robot_neither_linked_nor_blocking(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]])
        alive = np.array([True, True, False])
        g = build_comm_graph(pts, alive, RANGE, BODY_RADIUS)
        assert g.adjacency[0, 1]
        assert not g.adjacency[:, 2].any()

    def test_matches_brute_force(self):
        rng = np.random.default_rng(20240811)
        for _ in range(25):
            n = int(rng.integers(5, 30))
            pts = rng.uniform(0.0, 2.0, (n, 2))
            alive = rng.random(n) > 0.2
            g = build_comm_graph(pts, alive, RANGE, BODY_RADIUS)
            assert (g.adjacency == brute_force_graph(pts, alive, RANGE, BODY_RADIUS)).all()

    def test_symmetry_and_empty_diagonal(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(0.0, 3.0, (40, 2))
        g = build_comm_graph(pts, np.ones(40, dtype=bool), RANGE, BODY_RADIUS)
        assert (g.adjacency == g.adjacency.T).all()
        assert not g.adjacency.diagonal().any()


class TestGabriel:
    def test_boundary_point_not_interior(self):
        # C sits exactly on the midpoint circle of A-B: edge kept
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]])
        g = build_comm_graph(pts, np.ones(3, dtype=bool), RANGE, BODY_RADIUS)
        g = gabriel_reduce(g, pts, np.ones(3, dtype=bool))
        assert g.gabriel[0, 1]

    def test_interior_point_removes_edge(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.1]])
        g = build_comm_graph(pts, np.ones(3, dtype=bool), RANGE, BODY_RADIUS)
        g = gabriel_reduce(g, pts, np.ones(3, dtype=bool))
        assert not g.gabriel[0, 1]
        assert g.gabriel[0, 2] and g.gabriel[2, 1]

    def test_matches_brute_force(self):
        rng = np.random.default_rng(77)
        for _ in range(25):
            n = int(rng.integers(5, 30))
            pts = rng.uniform(0.0, 2.0, (n, 2))
            alive = rng.random(n) > 0.15
            g = build_comm_graph(pts, alive, RANGE, BODY_RADIUS)
            g = gabriel_reduce(g, pts, alive)
            adj = brute_force_graph(pts, alive, RANGE, BODY_RADIUS)
            assert (g.gabriel == brute_force_gabriel(pts, alive, adj)).all()

    def test_subset_of_adjacency(self):
        rng = np.random.default_rng(13)
        pts = rng.uniform(0.0, 3.0, (60, 2))
        alive = np.ones(60, dtype=bool)
        g = gabriel_reduce(build_comm_graph(pts, alive, RANGE, BODY_RADIUS), pts, alive)
        assert not (g.gabriel & ~g.adjacency).any()


class TestPaddedNeighbors:
    def test_round_trip(self):
        rng = np.random.default_rng(2)
        adj = rng.random((15, 15)) < 0.3
        adj = adj | adj.T
        np.fill_diagonal(adj, False)
        idx, mask = padded_neighbors(adj)
        for i in range(15):
            assert sorted(idx[i][mask[i]].tolist()) == sorted(np.flatnonzero(adj[i]).tolist())

    def test_isolated_rows(self):
        idx, mask = padded_neighbors(np.zeros((4, 4), dtype=bool))
        assert not mask.any()
