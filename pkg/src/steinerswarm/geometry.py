"""Geometric primitives: 2-D vectors, the visibility-limited unit-disk
communication graph, and its Gabriel reduction.

All functions here are pure; the heavy ones are vectorized over numpy
arrays and safe to call from concurrent trial runners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Vec2:
    """A finite 2-D vector in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Vec2 components must be finite, got ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def normalized(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            return Vec2(0.0, 0.0)
        return Vec2(self.x / n, self.y / n)

    def rotated(self, angle: float) -> "Vec2":
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec2":
        return Vec2(float(a[0]), float(a[1]))


def as_points(positions) -> np.ndarray:
    """Coerce a list of Vec2 (or any (n,2) array-like) to an (n,2) float array."""
    if isinstance(positions, np.ndarray):
        pts = positions.astype(float, copy=False)
    else:
        pts = np.array(
            [[p.x, p.y] if isinstance(p, Vec2) else [p[0], p[1]] for p in positions],
            dtype=float,
        )
    if pts.size == 0:
        return pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (n,2) positions, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError("positions must be finite")
    return pts


@dataclass
class CommGraph:
    """Per-tick communication graph over robot indices 0..n-1.

    `adjacency` is the visibility-limited unit-disk graph, `gabriel` the
    subset of it that satisfies the Gabriel edge condition.  Both are
    symmetric, irreflexive boolean matrices.
    """

    adjacency: np.ndarray
    gabriel: np.ndarray = field(default=None)
    d2: np.ndarray = field(default=None, repr=False)  # cached squared distances

    def __post_init__(self):
        if self.gabriel is None:
            self.gabriel = np.zeros_like(self.adjacency)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def gabriel_neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.gabriel[i])

    def edges(self) -> np.ndarray:
        """(E,2) array of index pairs with u < v."""
        return np.argwhere(np.triu(self.adjacency, 1))


def build_comm_graph(positions, alive=None, range_: float = 1.2,
                     body_radius: float = 0.05) -> CommGraph:
    """Build the line-of-sight unit-disk graph.

    An edge (u,v) exists iff both robots are alive, |p_u - p_v| <= range_,
    and no third alive robot's body disk (radius body_radius) comes
    strictly closer than body_radius to the segment between the centers.
    Exact tangency does not occlude.
    """
    pts = as_points(positions)
    n = len(pts)
    if range_ <= 0:
        raise ValueError("range must be positive")
    if body_radius < 0:
        raise ValueError("body_radius must be non-negative")
    if alive is None:
        alive = np.ones(n, dtype=bool)
    else:
        alive = np.asarray(alive, dtype=bool)

    adj = np.zeros((n, n), dtype=bool)
    if n < 2 or alive.sum() < 2:
        return CommGraph(adj)

    sq = (pts * pts).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    inrange = (d2 <= range_ * range_) & alive[:, None] & alive[None, :]
    np.fill_diagonal(inrange, False)

    pairs = np.argwhere(np.triu(inrange, 1))  # (E,2)
    if len(pairs) == 0:
        return CommGraph(adj, d2=d2)

    # candidate blockers must be near both endpoints; screening against a
    # slightly inflated range bounds every robot that could touch the segment
    reach = (range_ + body_radius) ** 2
    candmat = (d2 <= reach) & alive[None, :]
    cand = candmat[pairs[:, 0]] & candmat[pairs[:, 1]]       # (E,n)
    cand[np.arange(len(pairs)), pairs[:, 0]] = False
    cand[np.arange(len(pairs)), pairs[:, 1]] = False
    e_idx, w_idx = np.nonzero(cand)
    if len(e_idx):
        u, v = pairs[e_idx, 0], pairs[e_idx, 1]
        dx = pts[v, 0] - pts[u, 0]
        dy = pts[v, 1] - pts[u, 1]
        seg2 = np.maximum(dx * dx + dy * dy, 1e-300)
        px = pts[w_idx, 0] - pts[u, 0]
        py = pts[w_idx, 1] - pts[u, 1]
        t = np.clip((px * dx + py * dy) / seg2, 0.0, 1.0)
        cx = t * dx - px
        cy = t * dy - py
        hit = cx * cx + cy * cy < body_radius * body_radius
        blocked = np.zeros(len(pairs), dtype=bool)
        blocked[e_idx[hit]] = True
        keep = ~blocked
    else:
        keep = np.ones(len(pairs), dtype=bool)

    kept = pairs[keep]
    adj[kept[:, 0], kept[:, 1]] = True
    adj[kept[:, 1], kept[:, 0]] = True
    return CommGraph(adj, d2=d2)


def gabriel_reduce(graph: CommGraph, positions, alive=None) -> CommGraph:
    """Fill graph.gabriel with the Gabriel subset of the adjacency.

    An edge (u,v) is kept iff no other alive robot lies strictly inside
    the disk whose diameter is the segment uv, i.e. strictly closer to
    the midpoint than the endpoints are.
    """
    pts = as_points(positions)
    n = graph.n
    if alive is None:
        alive = np.ones(n, dtype=bool)
    else:
        alive = np.asarray(alive, dtype=bool)

    gab = np.zeros_like(graph.adjacency)
    pairs = graph.edges()
    if len(pairs) == 0:
        graph.gabriel = gab
        return graph

    # any robot strictly inside the diameter disk is within the edge length
    # (hence within range) of both endpoints, so screen on that
    if graph.d2 is not None and graph.d2.shape == (n, n):
        d2 = graph.d2
    else:
        sq = (pts * pts).sum(axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    edge2 = d2[pairs[:, 0], pairs[:, 1]]
    cand = (d2[pairs[:, 0]] <= edge2[:, None]) & (d2[pairs[:, 1]] <= edge2[:, None])
    cand &= alive[None, :]
    cand[np.arange(len(pairs)), pairs[:, 0]] = False
    cand[np.arange(len(pairs)), pairs[:, 1]] = False
    e_idx, w_idx = np.nonzero(cand)
    blocked = np.zeros(len(pairs), dtype=bool)
    if len(e_idx):
        u, v = pairs[e_idx, 0], pairs[e_idx, 1]
        mx = 0.5 * (pts[u, 0] + pts[v, 0])
        my = 0.5 * (pts[u, 1] + pts[v, 1])
        ex = pts[w_idx, 0] - mx
        ey = pts[w_idx, 1] - my
        inside = ex * ex + ey * ey < 0.25 * edge2[e_idx]
        blocked[e_idx[inside]] = True
    keep = ~blocked

    kept = pairs[keep]
    gab[kept[:, 0], kept[:, 1]] = True
    gab[kept[:, 1], kept[:, 0]] = True
    graph.gabriel = gab
    return graph


def padded_neighbors(adj: np.ndarray):
    """Turn a boolean adjacency matrix into padded neighbor-index arrays.

    Returns (idx, mask) where idx is (n, K) int with K = max degree
    (at least 1) and mask is (n, K) bool; padded slots point at 0.
    """
    n = adj.shape[0]
    deg = adj.sum(axis=1)
    K = max(1, int(deg.max()) if n else 1)
    idx = np.zeros((n, K), dtype=np.intp)
    mask = np.zeros((n, K), dtype=bool)
    rows, cols = np.nonzero(adj)  # row-major, so cols are sorted per row
    if len(rows):
        # slot of each neighbor within its row
        first = np.zeros(n + 1, dtype=np.intp)
        np.cumsum(deg, out=first[1:])
        slot = np.arange(len(rows)) - first[rows]
        idx[rows, slot] = cols
        mask[rows, slot] = True
    return idx, mask
