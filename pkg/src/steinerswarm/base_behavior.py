"""Base behavior stack: potential-field flocking, angular-gap boundary
detection with a small-hole filter, and boundary tension.

Each behavior exists in two equivalent forms: a per-robot function over
NeighborView lists (the auditable, local contract) and a batched kernel
over padded neighbor arrays used by the engine.  Tests pin their
equivalence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .core import NeighborView, RobotState
from .geometry import Vec2

TWO_PI = 2.0 * math.pi


@dataclass
class FlockParams:
    spacing: float = 0.65          # potential minimum d0, meters; must be < range
    attraction: float = 20.0       # spring gain beyond d0
    repulsion: float = 60.0        # gain below d0, amplified toward contact
    consensus: float = 10.0        # velocity-matching gain
    range_: float = 1.2            # communication range; attraction fades to 0 here
    bump_h: float = 0.6            # fraction of range where the fade-out starts
    response: float = 1.0          # how strongly external force damps consensus

    def __post_init__(self):
        if not (0.0 < self.spacing < self.range_):
            raise ValueError("spacing must be in (0, range)")
        if min(self.attraction, self.repulsion, self.consensus) < 0:
            raise ValueError("gains must be non-negative")


@dataclass
class BoundaryInfo:
    on_boundary: bool
    boundary_neighbors: Optional[Tuple[int, int]] = None
    hole_flag: bool = False
    degenerate: bool = False


def _bump(z: np.ndarray, h: float) -> np.ndarray:
    """Smooth cutoff: 1 on [0,h], cosine ramp down to 0 at 1, 0 beyond."""
    out = np.zeros_like(z)
    out[z <= h] = 1.0
    ramp = (z > h) & (z <= 1.0)
    out[ramp] = 0.5 * (1.0 + np.cos(math.pi * (z[ramp] - h) / (1.0 - h)))
    return out


def pair_force_gain(dist: np.ndarray, params: FlockParams) -> np.ndarray:
    """Signed magnitude of the pairwise force along the line to a neighbor.

    Positive is attraction; zero exactly at the desired spacing; fades
    smoothly to zero at the communication range.
    """
    d = np.asarray(dist, dtype=float)
    d0 = params.spacing
    safe = np.maximum(d, 1e-9)
    attract = params.attraction * (d - d0) * _bump(d / params.range_, params.bump_h)
    repel = params.repulsion * (d - d0) * (d0 / safe)
    return np.where(d >= d0, attract, repel)


def consensus_scale(ext_norm, lo: float = 0.25):
    """Damping factor for the velocity-consensus term.

    The consensus gain is scaled down as the total non-flocking force on
    the robot grows, clamped to [lo, 1], so added steering forces are not
    fought by velocity matching.
    """
    return np.clip(1.0 - np.asarray(ext_norm, dtype=float), lo, 1.0)


def flocking_force_batch(rel_pos: np.ndarray, rel_vel: np.ndarray,
                         mask: np.ndarray, params: FlockParams,
                         ext_norm=None) -> np.ndarray:
    """Flocking force for every robot; arrays are (n,K,2) / (n,K)."""
    n = rel_pos.shape[0]
    dist = np.linalg.norm(rel_pos, axis=2)
    dist_safe = np.maximum(dist, 1e-9)
    gain = pair_force_gain(dist, params) * mask
    grad = (rel_pos / dist_safe[..., None] * gain[..., None]).sum(axis=1)

    deg = np.maximum(mask.sum(axis=1), 1)
    mean_rel_vel = (rel_vel * mask[..., None]).sum(axis=1) / deg[:, None]
    if ext_norm is None:
        scale = np.ones(n)
    else:
        scale = consensus_scale(params.response * np.asarray(ext_norm, dtype=float))
    cons = params.consensus * scale[:, None] * mean_rel_vel
    out = grad + cons
    out[mask.sum(axis=1) == 0] = 0.0
    return out


def flocking_force(self: RobotState, views, params: FlockParams,
                   ext_force_norm: float = 0.0) -> Vec2:
    """Per-robot flocking force in the observer frame; zero with no views."""
    if not views:
        return Vec2(0.0, 0.0)
    rel_pos = np.array([[v.relative_position.x, v.relative_position.y] for v in views])
    rel_vel = np.array([[v.relative_velocity.x, v.relative_velocity.y] for v in views])
    mask = np.ones((1, len(views)), dtype=bool)
    out = flocking_force_batch(rel_pos[None], rel_vel[None], mask, params,
                               ext_norm=np.array([ext_force_norm]))
    return Vec2.from_array(out[0])


def bearing_gaps(rel_pos: np.ndarray, mask: np.ndarray):
    """Sorted neighbor bearings and the angular gaps between them.

    Returns (order, angles_sorted, gaps, deg): order and angles_sorted are
    (n,K) with padded slots pushed last, gaps[i,j] is the gap after the
    j-th sorted neighbor (wrapping at j = deg-1); padded gaps are 0.
    """
    n, K = mask.shape
    ang = np.where(mask, np.arctan2(rel_pos[..., 1], rel_pos[..., 0]), np.inf)
    order = np.argsort(ang, axis=1, kind="stable")
    sa = np.take_along_axis(ang, order, axis=1)
    deg = mask.sum(axis=1)

    col = np.arange(K)[None, :]
    sa_f = np.where(np.isfinite(sa), sa, 0.0)  # keep padded slots out of arithmetic
    sa_next = np.concatenate([sa_f[:, 1:], sa_f[:, :1]], axis=1)
    wrap = sa_f[:, :1] + TWO_PI - sa_f
    gaps = np.where(col < (deg - 1)[:, None], sa_next - sa_f,
                    np.where((col == (deg - 1)[:, None]) & (deg > 0)[:, None],
                             wrap, 0.0))
    gaps[deg == 0] = 0.0
    return order, sa, gaps, deg


def boundary_batch(rel_pos: np.ndarray, mask: np.ndarray, nbr_idx: np.ndarray,
                   theta_b: float):
    """Boundary detection for every robot.

    Returns (on_boundary (n,), pair (n,2) neighbor indices or -1,
    max_gap (n,)).  A robot is on the boundary iff its largest angular
    gap exceeds theta_b; robots with fewer than 2 neighbors are boundary
    with no pair.
    """
    n, K = mask.shape
    order, _, gaps, deg = bearing_gaps(rel_pos, mask)
    gstar = np.argmax(gaps, axis=1)
    max_gap = gaps[np.arange(n), gstar]
    max_gap = np.where(deg == 0, TWO_PI, max_gap)
    on_boundary = (max_gap > theta_b) | (deg < 2)

    pair = np.full((n, 2), -1, dtype=np.intp)
    ok = deg >= 2
    rows = np.flatnonzero(ok)
    a_sorted = gstar[rows]
    b_sorted = (gstar[rows] + 1) % deg[rows]
    a_slot = order[rows, a_sorted]
    b_slot = order[rows, b_sorted]
    pair[rows, 0] = nbr_idx[rows, a_slot]
    pair[rows, 1] = nbr_idx[rows, b_slot]
    pair[~on_boundary] = -1
    return on_boundary, pair, max_gap


def detect_boundary(self: RobotState, views, theta_b: float = math.radians(100.0)
                    ) -> BoundaryInfo:
    """Per-robot boundary detection over a NeighborView list."""
    if not views:
        return BoundaryInfo(on_boundary=True, degenerate=True)
    if len(views) == 1:
        return BoundaryInfo(on_boundary=True)
    rel_pos = np.array([[v.relative_position.x, v.relative_position.y] for v in views])
    ids = np.array([v.neighbor_id for v in views], dtype=np.intp)
    mask = np.ones((1, len(views)), dtype=bool)
    on_b, pair, _ = boundary_batch(rel_pos[None], mask, ids[None], theta_b)
    if not on_b[0]:
        return BoundaryInfo(on_boundary=False)
    return BoundaryInfo(on_boundary=True,
                        boundary_neighbors=(int(pair[0, 0]), int(pair[0, 1])))


def flag_small_holes(on_boundary: np.ndarray, pair: np.ndarray,
                     hole_max_hops: int = 8) -> np.ndarray:
    """Mark boundary robots that belong to a small interior hole.

    Boundary robots are linked to their two boundary neighbors; a
    connected component whose cycle closes within hole_max_hops robots is
    treated as a vanishing small hole and excluded from the boundary used
    by the thickness and compression machinery.
    """
    n = len(on_boundary)
    hole = np.zeros(n, dtype=bool)
    b_idx = np.flatnonzero(on_boundary)
    if len(b_idx) == 0:
        return hole
    src = np.repeat(b_idx, 2)
    dst = pair[b_idx].reshape(-1)
    ok = (dst >= 0) & on_boundary[np.maximum(dst, 0)]
    src, dst = src[ok], dst[ok]
    if len(src) == 0:
        return hole
    graph = sparse.csr_matrix((np.ones(len(src), dtype=bool), (src, dst)),
                              shape=(n, n))
    _, labels = csgraph.connected_components(graph, directed=False)
    sizes = np.bincount(labels)
    linked = np.zeros(n, dtype=bool)
    linked[src] = True
    linked[dst] = True
    hole[linked & (sizes[labels] <= hole_max_hops)] = True
    return hole


def tension_force_batch(positions: np.ndarray, on_boundary: np.ndarray,
                        pair: np.ndarray, hole: np.ndarray,
                        gain: float = 1.0) -> np.ndarray:
    """Boundary tension for every robot: pull toward the midpoint of the
    two boundary neighbors; zero for interior, hole, or pairless robots."""
    n = len(positions)
    out = np.zeros((n, 2))
    act = on_boundary & ~hole & (pair[:, 0] >= 0) & (pair[:, 1] >= 0)
    rows = np.flatnonzero(act)
    if len(rows):
        mid = 0.5 * (positions[pair[rows, 0]] + positions[pair[rows, 1]])
        out[rows] = gain * (mid - positions[rows])
    return out


def boundary_tension_force(self: RobotState, info: BoundaryInfo, views,
                           gain: float = 1.0) -> Vec2:
    """Per-robot boundary tension in the observer frame."""
    if not info.on_boundary or info.hole_flag or info.boundary_neighbors is None:
        return Vec2(0.0, 0.0)
    by_id = {v.neighbor_id: v for v in views}
    a = by_id.get(info.boundary_neighbors[0])
    b = by_id.get(info.boundary_neighbors[1])
    if a is None or b is None:
        return Vec2(0.0, 0.0)  # stale boundary info
    mid = (a.relative_position + b.relative_position) * 0.5
    return mid * gain
