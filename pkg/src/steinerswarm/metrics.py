"""Oracle-side evaluation: connectivity of the alive swarm, exact
Euclidean Steiner minimal trees over the leader positions, and the
benchmark performance ratio.

The Steiner solver enumerates all full topologies (feasible for up to 6
terminals) and optimizes Steiner point coordinates by the classic
fixed-point iteration; degenerate topologies arise as collapsed limits
of full ones, so the minimum over full topologies is the exact SMT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .geometry import CommGraph, as_points

RELAY_REFERENCE_RATIO = 0.3215
STEINER_RATIO = math.sqrt(3.0) / 2.0


@dataclass
class TrialRecord:
    """One sampled tick of a trial's metric time series."""

    tick: int
    alive_count: int
    connected: bool
    smt_length: float
    perf_ratio: float
    strategy: str = ""
    failure_rate: float = 0.0
    seed: int = 0


def is_connected(graph: CommGraph, alive=None) -> bool:
    """True iff all alive robots form one component of the adjacency."""
    adj = graph.adjacency
    n = graph.n
    if alive is None:
        alive = np.ones(n, dtype=bool)
    else:
        alive = np.asarray(alive, dtype=bool)
    idx = np.flatnonzero(alive)
    if len(idx) <= 1:
        return True
    visited = np.zeros(n, dtype=bool)
    frontier = np.zeros(n, dtype=bool)
    frontier[idx[0]] = True
    visited[idx[0]] = True
    while frontier.any():
        reach = adj[frontier].any(axis=0) & alive & ~visited
        visited |= reach
        frontier = reach
    return bool(visited[alive].all())


def performance_ratio(smt_length: float, alive_count: int, range_: float) -> float:
    """Steiner tree length over the maximally stretched chain length."""
    if alive_count < 1:
        raise ValueError("alive_count must be >= 1")
    return smt_length / (alive_count * range_)


def relay_reference_line() -> float:
    """Reference ratio of the best known relay-placement approximation."""
    return RELAY_REFERENCE_RATIO


def euclidean_mst(points: np.ndarray) -> Tuple[float, List[Tuple[int, int]]]:
    """Prim's algorithm on the complete graph; O(n^2), fine for small n.

    Returns (total length, tree edges as index pairs)."""
    pts = as_points(points)
    n = len(pts)
    if n < 2:
        return 0.0, []
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = np.linalg.norm(pts - pts[0], axis=1)
    best[0] = np.inf
    parent = np.zeros(n, dtype=int)
    total = 0.0
    edges: List[Tuple[int, int]] = []
    for _ in range(n - 1):
        j = int(np.argmin(np.where(in_tree, np.inf, best)))
        total += best[j]
        edges.append((int(parent[j]), j))
        in_tree[j] = True
        d = np.linalg.norm(pts - pts[j], axis=1)
        closer = d < best
        best = np.where(closer, d, best)
        parent = np.where(closer, j, parent)
        best[in_tree] = np.inf
    return total, edges


def euclidean_mst_length(points: np.ndarray) -> float:
    return euclidean_mst(points)[0]


def _full_topologies(n_term: int) -> List[List[Tuple[int, int]]]:
    """All full Steiner topologies over terminals 0..n_term-1.

    Steiner points are numbered n_term, n_term+1, ...; each topology is an
    edge list.  Built by inserting each new terminal into every edge of
    every smaller topology via a fresh Steiner point.
    """
    topos = [[(0, 1)]]
    n_steiner = 0
    for k in range(2, n_term):
        nxt = []
        s = n_term + n_steiner
        for edges in topos:
            for i, (a, b) in enumerate(edges):
                new = edges[:i] + edges[i + 1:] + [(a, s), (b, s), (k, s)]
                nxt.append(new)
        topos = nxt
        n_steiner += 1
    return topos


def _optimize_topology(term: np.ndarray, edges: List[Tuple[int, int]],
                       n_steiner: int, tol: float = 1e-12,
                       max_iter: int = 5000):
    """Minimize total edge length over Steiner point coordinates.

    The objective is convex; each step solves the weighted-average linear
    system of the fixed-point characterization, which decreases length
    monotonically.  Returns (length, all point coordinates).
    """
    n_term = len(term)
    if n_steiner == 0:
        pts = term
        length = sum(np.linalg.norm(pts[a] - pts[b]) for a, b in edges)
        return length, pts
    pts = np.vstack([term, np.full((n_steiner, 2), term.mean(axis=0))])
    # deterministic small spread so initial distances are nonzero
    for i in range(n_steiner):
        pts[n_term + i] += 1e-3 * np.array([math.cos(i), math.sin(i)])
    ea = np.array([e[0] for e in edges])
    eb = np.array([e[1] for e in edges])
    scale = max(1.0, float(np.abs(term).max()))
    for _ in range(min(max_iter, 300)):
        d = np.linalg.norm(pts[ea] - pts[eb], axis=1)
        w = 1.0 / np.maximum(d, 1e-12)
        A = np.zeros((n_steiner, n_steiner))
        rhs = np.zeros((n_steiner, 2))
        for (a, b), we in zip(edges, w):
            for u, v in ((a, b), (b, a)):
                if u >= n_term:
                    ui = u - n_term
                    A[ui, ui] += we
                    if v >= n_term:
                        A[ui, v - n_term] -= we
                    else:
                        rhs[ui] += we * term[v]
        new = np.linalg.solve(A, rhs)
        shift = float(np.abs(new - pts[n_term:]).max())
        pts[n_term:] = new
        if shift < tol * scale:
            break
        # a Steiner point collapsing onto a terminal approaches it ever more
        # slowly; once it is pinned this tightly the tree length is settled
        dt = np.linalg.norm(pts[n_term:, None, :] - term[None, :, :], axis=2)
        if shift < 1e-9 * scale and (dt.min(axis=1) < 1e-7 * scale).any():
            break
    _newton_polish(pts, term, edges, n_term, n_steiner, scale)
    d = np.linalg.norm(pts[ea] - pts[eb], axis=1)
    return float(d.sum()), pts


def _newton_polish(pts: np.ndarray, term: np.ndarray,
                   edges: List[Tuple[int, int]], n_term: int,
                   n_steiner: int, scale: float) -> None:
    """Damped Newton steps on the Steiner coordinates for high-accuracy
    junction angles; no-op when the configuration is (near-)degenerate."""
    k = 2 * n_steiner
    # a Steiner point sitting on another point has a non-smooth length term;
    # freeze it and polish only the free junctions
    frozen = np.zeros(n_steiner, dtype=bool)

    def freeze_collapsed():
        for a, b in edges:
            if float(np.hypot(*(pts[a] - pts[b]))) < 1e-7 * scale:
                for s in (a, b):
                    if s >= n_term:
                        frozen[s - n_term] = True

    freeze_collapsed()
    if frozen.all():
        return

    def grad_hess():
        g = np.zeros((n_steiner, 2))
        H = np.zeros((k, k))
        for a, b in edges:
            d = pts[a] - pts[b]
            nrm = float(np.hypot(d[0], d[1]))
            if nrm < 1e-9 * scale:
                continue
            u = d / nrm
            P = (np.eye(2) - np.outer(u, u)) / nrm
            for s, sign in ((a, 1.0), (b, -1.0)):
                if s < n_term or frozen[s - n_term]:
                    continue
                si = s - n_term
                g[si] += sign * u
                H[2 * si:2 * si + 2, 2 * si:2 * si + 2] += P
            if (a >= n_term and b >= n_term
                    and not frozen[a - n_term] and not frozen[b - n_term]):
                ai, bi = a - n_term, b - n_term
                H[2 * ai:2 * ai + 2, 2 * bi:2 * bi + 2] -= P
                H[2 * bi:2 * bi + 2, 2 * ai:2 * ai + 2] -= P
        for si in np.flatnonzero(frozen):
            H[2 * si, 2 * si] = H[2 * si + 1, 2 * si + 1] = 1.0
        return g, H

    def grad_norm():
        g, _ = grad_hess()
        return float(np.abs(g).max()), g

    gn, g = grad_norm()
    for _ in range(100):
        if gn < 1e-12:
            return
        _, H = grad_hess()
        try:
            delta = np.linalg.solve(H + 1e-12 * np.eye(k),
                                    -g.reshape(k)).reshape(n_steiner, 2)
        except np.linalg.LinAlgError:
            return
        base = pts[n_term:].copy()
        step = 1.0
        for _ in range(25):
            pts[n_term:] = base + step * delta
            new_gn, new_g = grad_norm()
            if new_gn < gn:
                gn, g = new_gn, new_g
                break
            step *= 0.5
        else:
            # stuck: an edge is collapsing below the freeze threshold;
            # pin the offending junction and keep polishing the rest
            pts[n_term:] = base
            shortest, victim = np.inf, -1
            for a, b in edges:
                d = float(np.hypot(*(pts[a] - pts[b])))
                for s in (a, b):
                    if (s >= n_term and not frozen[s - n_term]
                            and d < shortest):
                        shortest, victim = d, s - n_term
            if victim < 0:
                return
            frozen[victim] = True
            if frozen.all():
                return
            gn, g = grad_norm()


@dataclass
class SteinerTree:
    length: float
    points: np.ndarray                      # terminals first, then Steiner points
    edges: List[Tuple[int, int]] = field(default_factory=list)
    n_terminals: int = 0


def steiner_minimal_tree(terminals, merge_tol: float = 1e-12) -> SteinerTree:
    """Exact Euclidean Steiner minimal tree for up to 6 terminals.

    Coincident terminals are merged first; fewer than 2 distinct
    terminals give length 0.  Every call asserts the Steiner-ratio
    bracket against the Euclidean MST of the same terminals.
    """
    pts = as_points(terminals)
    # merge coincident terminals
    distinct: List[np.ndarray] = []
    for p in pts:
        if not any(np.linalg.norm(p - q) <= merge_tol for q in distinct):
            distinct.append(p)
    term = np.array(distinct).reshape(-1, 2)
    n = len(term)
    if n < 2:
        return SteinerTree(0.0, term, [], n)
    if n > 6:
        raise ValueError("solver supports at most 6 terminals")

    # the MST itself is the optimum whenever every Steiner point of the
    # best full topology degenerates onto a terminal
    mst, mst_edges = euclidean_mst(term)
    best = (mst, term, mst_edges)
    for edges in _full_topologies(n):
        length, coords = _optimize_topology(term, edges, max(0, n - 2))
        if length < best[0]:
            best = (length, coords, edges)
    length, coords, edges = best

    assert length <= mst + 1e-9, "SMT exceeded MST"
    assert length >= STEINER_RATIO * mst - 1e-9, "SMT below Steiner ratio bound"
    return SteinerTree(length, coords, edges, n)
