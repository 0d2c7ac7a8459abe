"""Thickness fields (b, t, h), compression, observable area, and density."""

import math

import numpy as np
import pytest

from steinerswarm.base_behavior import BoundaryInfo
from steinerswarm.core import NeighborView, PublicVars, RobotState
from steinerswarm.geometry import Vec2
from steinerswarm.stability import (
    compression_force,
    compression_force_batch,
    density_force,
    hex_observable_density,
    observable_area,
    observable_area_batch,
    origin_density_batch,
    phi,
    update_b_batch,
    update_t_h_batch,
)

RANGE = 1.2
BODY_RADIUS = 0.05
SPACING = 0.65


def view(x, y, nid=0, rho=0.0, t=0.0, h=0.0, b=0.0, gab=True):
    return NeighborView(neighbor_id=nid, relative_position=Vec2(x, y),
                        relative_orientation=0.0,
                        published=PublicVars(b=b, t=t, h=h, rho=rho),
                        in_gabriel=gab)


def robot():
    return RobotState(id=7, position=Vec2(0.0, 0.0))


def hex_disk(rings, spacing=SPACING):
    coords = [(i, j) for i in range(-rings, rings + 1)
              for j in range(-rings, rings + 1)
              if max(abs(i), abs(j), abs(i + j)) <= rings]
    pts = np.array([[(i + 0.5 * j) * spacing,
                     j * spacing * math.sqrt(3.0) / 2.0] for i, j in coords])
    ring = np.array([max(abs(i), abs(j), abs(i + j)) for i, j in coords])
    return pts, ring


def first_ring_neighbors(pts, spacing=SPACING):
    """Padded neighbor arrays over lattice-adjacent robots."""
    n = len(pts)
    rel = pts[None, :, :] - pts[:, None, :]
    dist = np.linalg.norm(rel, axis=2)
    adj = (dist < spacing * 1.1) & (dist > 0)
    K = int(adj.sum(axis=1).max())
    rel_p = np.zeros((n, K, 2))
    mask = np.zeros((n, K), dtype=bool)
    idx = np.zeros((n, K), dtype=np.intp)
    for i in range(n):
        nbrs = np.flatnonzero(adj[i])
        rel_p[i, :len(nbrs)] = rel[i, nbrs]
        idx[i, :len(nbrs)] = nbrs
        mask[i, :len(nbrs)] = True
    return rel_p, mask, idx


class TestPhi:
    def test_values(self):
        assert phi(2.0) == pytest.approx(4.0)
        assert phi(-3.0) == pytest.approx(-9.0)
        assert phi(0.0) == 0.0

    def test_odd(self):
        xs = np.linspace(-5, 5, 21)
        assert np.allclose(phi(-xs), -phi(xs))


class TestBField:
    def run_to_fixpoint(self, pts, boundary, rounds):
        n = len(pts)
        _, mask, idx = first_ring_neighbors(pts)
        b = np.full(n, float(n))
        sentinel = float(n)
        for _ in range(rounds):
            nb_b = b[idx]
            b = update_b_batch(nb_b, mask, boundary, b, sentinel)
        return b

    def test_boundary_robots_zero(self):
        pts, ring = hex_disk(3)
        b = self.run_to_fixpoint(pts, ring == 3, 10)
        assert (b[ring == 3] == 0.0).all()

    def test_chain_all_boundary(self):
        pts = np.array([[i * 0.6, 0.0] for i in range(8)])
        boundary = np.ones(8, dtype=bool)
        b = self.run_to_fixpoint(pts, boundary, 5)
        assert (b == 0.0).all()

    def test_hex_disk_matches_bfs(self):
        pts, ring = hex_disk(4)
        boundary = ring == 4
        b = self.run_to_fixpoint(pts, boundary, 6)
        # BFS from the boundary set over lattice adjacency
        _, mask, idx = first_ring_neighbors(pts)
        n = len(pts)
        oracle = np.full(n, np.inf)
        oracle[boundary] = 0.0
        frontier = list(np.flatnonzero(boundary))
        while frontier:
            nxt = []
            for u in frontier:
                for v in idx[u][mask[u]]:
                    if oracle[v] == np.inf:
                        oracle[v] = oracle[u] + 1.0
                        nxt.append(int(v))
            frontier = nxt
        assert (b == oracle).all()
        assert b.max() == 4.0  # center of a 4-ring disk

    def test_converges_within_diameter_rounds(self):
        pts, ring = hex_disk(4)
        b_fast = self.run_to_fixpoint(pts, ring == 4, 8)
        b_long = self.run_to_fixpoint(pts, ring == 4, 40)
        assert (b_fast == b_long).all()


class TestTHFields:
    def run_fields(self, pts, boundary, rounds, slack=2.0):
        n = len(pts)
        _, mask, idx = first_ring_neighbors(pts)
        sentinel = float(n)
        b = np.full(n, sentinel)
        t = np.zeros(n)
        h = np.zeros(n)
        for _ in range(rounds):
            b = update_b_batch(b[idx], mask, boundary, b, sentinel)
            t, h = update_t_h_batch(b, t[idx], h[idx], mask, h, slack, sentinel)
        return b, t, h

    def test_all_boundary_blob(self):
        pts = np.array([[i * 0.6, 0.0] for i in range(6)])
        b, t, h = self.run_fields(pts, np.ones(6, dtype=bool), 8)
        assert (t == 0.0).all()
        assert (h == 0.0).all()

    def test_hex_disk_fixed_point(self):
        pts, ring = hex_disk(3)
        b, t, h = self.run_fields(pts, ring == 3, 25)
        assert (t == 3.0).all()
        assert (h == ring).all()

    def test_limb_inherits_blob_thickness_near_junction(self):
        # 3-ring disk with a 10-robot chain attached to a rim robot
        pts, ring = hex_disk(3)
        rim = np.flatnonzero(ring == 3)
        anchor = pts[rim[0]]
        direction = anchor / np.linalg.norm(anchor)
        chain = anchor[None, :] + np.outer(np.arange(1, 11) * 0.6, direction)
        allpts = np.vstack([pts, chain])
        boundary = np.ones(len(allpts), dtype=bool)
        boundary[:len(pts)] = ring == 3
        b, t, h = self.run_fields(allpts, boundary, 60)

        # global fixed-point oracle, iterated synchronously to convergence
        _, mask, idx = first_ring_neighbors(allpts)
        n = len(allpts)
        ot = np.zeros(n)
        oh = np.zeros(n)
        for _ in range(200):
            nt, nh = update_t_h_batch(b, ot[idx], oh[idx], mask, oh, 2.0, float(n))
            if (nt == ot).all() and (nh == oh).all():
                break
            ot, oh = nt, nh
        assert (t == ot).all()
        assert (h == oh).all()
        # near the junction the chain still carries the blob thickness,
        # further out it falls to the local maxima (b = 0)
        assert t[len(pts)] == 3.0
        assert t[-1] == 0.0


class TestCompression:
    def test_interior_zero(self):
        info = BoundaryInfo(on_boundary=False)
        f = compression_force(robot(), 4.0, info, [view(0.5, 0.0)], gain=0.2)
        assert f == Vec2(0.0, 0.0)

    def test_hole_zero(self):
        info = BoundaryInfo(on_boundary=True, hole_flag=True)
        f = compression_force(robot(), 4.0, info, [view(0.5, 0.0)], gain=0.2)
        assert f == Vec2(0.0, 0.0)

    def test_linear_in_thickness(self):
        info = BoundaryInfo(on_boundary=True)
        views = [view(0.5, 0.1), view(0.3, -0.2)]
        f4 = compression_force(robot(), 4.0, info, views, gain=0.2)
        f2 = compression_force(robot(), 2.0, info, views, gain=0.2)
        assert f4.norm() == pytest.approx(2.0 * f2.norm())

    def test_points_toward_neighbor_mean(self):
        info = BoundaryInfo(on_boundary=True)
        f = compression_force(robot(), 3.0, info,
                              [view(0.0, 0.4), view(0.0, 0.6)], gain=0.2)
        assert f.x == pytest.approx(0.0, abs=1e-12)
        assert f.y > 0

    def test_batch_matches_per_robot(self):
        rel = np.array([[[0.5, 0.1], [0.3, -0.2]]])
        mask = np.ones((1, 2), dtype=bool)
        out = compression_force_batch(rel, mask, np.array([4.0]),
                                      np.array([True]), gain=0.2)
        info = BoundaryInfo(on_boundary=True)
        f = compression_force(robot(), 4.0, info,
                              [view(0.5, 0.1), view(0.3, -0.2)], gain=0.2)
        assert f.x == pytest.approx(out[0, 0])
        assert f.y == pytest.approx(out[0, 1])


class TestObservableArea:
    def test_six_symmetric_neighbors(self):
        views = [view(0.6 * math.cos(a), 0.6 * math.sin(a))
                 for a in np.arange(6) * math.pi / 3.0]
        area = observable_area(robot(), views, BoundaryInfo(on_boundary=False),
                               RANGE, BODY_RADIUS)
        trunc = min(RANGE, 0.3 + BODY_RADIUS)
        assert area == pytest.approx(math.pi * trunc * trunc)

    def test_boundary_largest_gap_replaced(self):
        # three neighbors at 0, 90, 180 degrees, equal distance: the
        # 180-degree exterior gap is swapped for the mean of the two
        # 90-degree sectors
        d = 0.6
        views = [view(d, 0.0), view(0.0, d), view(-d, 0.0)]
        area = observable_area(robot(), views, BoundaryInfo(on_boundary=True),
                               RANGE, BODY_RADIUS)
        r = min(RANGE, d / 2.0 + BODY_RADIUS)
        sector90 = 0.5 * r * r * (math.pi / 2.0)
        assert area == pytest.approx(3.0 * sector90)

    def test_interior_keeps_all_gaps(self):
        d = 0.6
        views = [view(d, 0.0), view(0.0, d), view(-d, 0.0)]
        area = observable_area(robot(), views, BoundaryInfo(on_boundary=False),
                               RANGE, BODY_RADIUS)
        r = min(RANGE, d / 2.0 + BODY_RADIUS)
        assert area == pytest.approx(0.5 * r * r * 2.0 * math.pi)

    def test_no_neighbors_full_disk(self):
        area = observable_area(robot(), [], BoundaryInfo(on_boundary=True,
                                                         degenerate=True),
                               RANGE, BODY_RADIUS)
        assert area == pytest.approx(math.pi * RANGE * RANGE)

    def test_single_neighbor_nominal_sector(self):
        views = [view(0.6, 0.0)]
        area = observable_area(robot(), views, BoundaryInfo(on_boundary=True),
                               RANGE, BODY_RADIUS)
        r = min(RANGE, 0.3 + BODY_RADIUS)
        # full 2-pi gap replaced by the nominal hex sector
        assert area == pytest.approx(0.5 * r * r * (math.pi / 3.0))


class TestOriginDensity:
    def test_collision_double_weight(self):
        rel = np.array([[[0.08, 0.0], [0.5, 0.0]]])
        mask = np.ones((1, 2), dtype=bool)
        rho = origin_density_batch(rel, mask, np.array([2.0]), BODY_RADIUS, 0.02)
        assert rho[0] == pytest.approx((2.0 + 1.0) / 2.0)

    def test_hex_target_consistent(self):
        target = hex_observable_density(SPACING, RANGE, BODY_RADIUS)
        assert 10.0 < target < 25.0


class TestDensityForce:
    def test_all_at_target_zero(self):
        target = 10.0
        views = [view(0.5, 0.0, rho=target), view(-0.3, 0.2, rho=target)]
        f = density_force(robot(), views, target, RANGE,
                          BoundaryInfo(on_boundary=False))
        assert f.norm() == pytest.approx(0.0, abs=1e-12)

    def test_boundary_zero(self):
        views = [view(0.5, 0.0, rho=99.0)]
        f = density_force(robot(), views, 10.0, RANGE,
                          BoundaryInfo(on_boundary=True))
        assert f == Vec2(0.0, 0.0)

    def test_overfull_neighbor_example(self):
        # neighbor at bearing (1,0), distance 0.5, rho - target = +1:
        # force (range - distance) * phi(1) toward the neighbor = (0.7, 0)
        target = 10.0
        views = [view(0.5, 0.0, rho=target + 1.0)]
        f = density_force(robot(), views, target, RANGE,
                          BoundaryInfo(on_boundary=False))
        assert f.x == pytest.approx(0.7)
        assert f.y == pytest.approx(0.0, abs=1e-12)

    def test_underfull_length_rule(self):
        # rho - target = -2: length is the distance, phi(-2) = -4
        target = 10.0
        views = [view(0.5, 0.0, rho=target - 2.0)]
        f = density_force(robot(), views, target, RANGE,
                          BoundaryInfo(on_boundary=False))
        assert f.x == pytest.approx(0.5 * -4.0)
