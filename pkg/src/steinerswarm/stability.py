"""Stability improvement: distributed thickness estimation (hops from
boundary b, local thickness t, circle-center distance h) over the
Gabriel-reduced neighborhood, the linear compression force, and density
regulation over the observable area.

The b/t/h recursions run one synchronous round per tick against the
neighbors' previous-tick values and converge to their fixed point within
graph-diameter ticks on a static graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .base_behavior import BoundaryInfo, bearing_gaps
from .core import RobotState
from .geometry import Vec2


@dataclass
class StabilityParams:
    slack: int = 2                  # lambda: tolerance for irregular boundaries, hops
    compression_gain: float = 0.2   # force per thickness hop
    target_density: float = 0.0     # robots/m^2; 0 = derive from spacing at build time
    collision_margin: float = 0.02  # extra ring where neighbors count double, m


def phi(x):
    """Signed square: x * |x|. Odd, zero at zero."""
    x = np.asarray(x, dtype=float)
    return x * np.abs(x)


@lru_cache(maxsize=64)
def hex_observable_density(spacing: float, range_: float, body_radius: float,
                           collision_margin: float = 0.02) -> float:
    """Density an interior robot measures on an ideal hex lattice at the
    given spacing, evaluated with the same area and weighting rules as
    observable_area / origin density."""
    pts = []
    for i in range(-3, 4):
        for j in range(-3, 4):
            x = (i + 0.5 * j) * spacing
            y = j * spacing * math.sqrt(3.0) / 2.0
            if (i, j) != (0, 0) and math.hypot(x, y) <= range_:
                pts.append((x, y))
    rel = np.asarray(pts, dtype=float)[None, :, :]
    mask = np.ones(rel.shape[:2], dtype=bool)
    on_b = np.zeros(1, dtype=bool)
    area = observable_area_batch(rel, mask, on_b, range_, body_radius)
    rho0 = origin_density_batch(rel, mask, area, body_radius, collision_margin)
    return float(rho0[0])


def update_b_batch(nb_b: np.ndarray, mask: np.ndarray, accepted_boundary: np.ndarray,
                   prev_b: np.ndarray, sentinel: float) -> np.ndarray:
    """One round of the boundary hop-distance recursion over N'.

    Boundary robots (small holes excluded) are 0; others take the minimum
    neighbor value plus one; with no finite neighbor value the previous
    value grows by one, clamped at the sentinel.
    """
    cand = np.where(mask, nb_b, np.inf) + 1.0
    best = cand.min(axis=1) if cand.shape[1] else np.full(len(prev_b), np.inf)
    fallback = np.minimum(prev_b + 1.0, sentinel)
    b = np.where(np.isfinite(best), np.minimum(best, sentinel), fallback)
    b[accepted_boundary] = 0.0
    return b


def update_b(self: RobotState, views, boundary: BoundaryInfo,
             sentinel: float) -> float:
    """Per-robot b update over the Gabriel neighbors in the views."""
    if boundary.on_boundary and not boundary.hole_flag:
        return 0.0
    vals = [v.published.b for v in views if v.in_gabriel]
    if vals:
        return min(min(vals) + 1.0, sentinel)
    return min(self.published.b + 1.0, sentinel)


def update_t_h_batch(b: np.ndarray, nb_t: np.ndarray, nb_h: np.ndarray,
                     mask: np.ndarray, prev_h: np.ndarray, slack: float,
                     sentinel: float):
    """One round of the thickness/center-distance recursions over N'.

    t is the max of own b and of neighbor thicknesses whose circle is
    still near enough (t(n) + slack >= h(n)); h is 0 at circle centers
    (t = b), else min over same-thickness neighbors of h + 1; with no
    such neighbor the previous h decays upward by one.
    """
    qual = mask & (nb_t + slack >= nb_h)
    t_cand = np.where(qual, nb_t, -np.inf)
    b_base = np.where(b < sentinel, b, 0.0)  # unconverged b must not inflate t
    t = np.maximum(b_base, t_cand.max(axis=1) if t_cand.shape[1] else -np.inf)
    t = np.maximum(t, 0.0)

    same = mask & (nb_t == t[:, None])
    h_cand = np.where(same, nb_h, np.inf) + 1.0
    h_min = h_cand.min(axis=1) if h_cand.shape[1] else np.full(len(b), np.inf)
    h = np.where(t == b_base, 0.0,
                 np.where(np.isfinite(h_min), h_min,
                          np.minimum(prev_h + 1.0, sentinel)))
    return t, h


def update_t_h(self: RobotState, views, slack: float, sentinel: float):
    """Per-robot t/h update over the Gabriel neighbors in the views."""
    gab = [v.published for v in views if v.in_gabriel]
    b = self.published.b if self.published.b < sentinel else 0.0
    t = max([b] + [p.t for p in gab if p.t + slack >= p.h])
    if t == b:
        return t, 0.0
    hs = [p.h + 1.0 for p in gab if p.t == t]
    if hs:
        return t, min(hs)
    return t, min(self.published.h + 1.0, sentinel)


def compression_force_batch(rel_pos: np.ndarray, mask: np.ndarray, t: np.ndarray,
                            accepted_boundary: np.ndarray, gain: float) -> np.ndarray:
    """Inward force on accepted boundary robots, linear in thickness.

    The inward normal is estimated as the direction from the robot to the
    mean of its neighbor positions.
    """
    n = rel_pos.shape[0]
    deg = mask.sum(axis=1)
    mean_rel = (rel_pos * mask[..., None]).sum(axis=1) / np.maximum(deg, 1)[:, None]
    norm = np.linalg.norm(mean_rel, axis=1, keepdims=True)
    inward = np.divide(mean_rel, norm, out=np.zeros_like(mean_rel), where=norm > 0)
    act = accepted_boundary & (deg > 0)
    return np.where(act[:, None], gain * t[:, None] * inward, 0.0)


def compression_force(self: RobotState, t: float, boundary: BoundaryInfo,
                      views, gain: float) -> Vec2:
    """Per-robot compression force; zero off-boundary and on small holes."""
    if not boundary.on_boundary or boundary.hole_flag or not views:
        return Vec2(0.0, 0.0)
    mean = Vec2(
        sum(v.relative_position.x for v in views) / len(views),
        sum(v.relative_position.y for v in views) / len(views),
    )
    return mean.normalized() * (gain * t)


def observable_area_batch(rel_pos: np.ndarray, mask: np.ndarray,
                          on_boundary: np.ndarray, range_: float,
                          body_radius: float) -> np.ndarray:
    """Observable area per robot from truncated angular sectors.

    Each gap between clockwise-consecutive neighbors contributes a sector
    whose radius blends the two bounding neighbors' truncation radii
    (half distance plus body radius, capped at range).  For boundary
    robots only the single largest (exterior) gap is replaced by the
    average of the remaining sectors; further exterior gaps stay included
    and lower the density.  Robots without neighbors get the full sensing
    disk (degenerate).
    """
    n, K = mask.shape
    dist = np.linalg.norm(rel_pos, axis=2)
    trunc = np.minimum(range_, dist / 2.0 + body_radius)
    trunc = np.where(mask, trunc, 0.0)

    order, _, gaps, deg = bearing_gaps(rel_pos, mask)
    trunc_sorted = np.take_along_axis(trunc, order, axis=1)
    trunc_next = np.concatenate([trunc_sorted[:, 1:], trunc_sorted[:, :1]], axis=1)
    col = np.arange(K)[None, :]
    is_last = col == (deg - 1)[:, None]
    r_next = np.where(is_last,
                      np.take_along_axis(trunc_sorted, np.zeros((n, 1), dtype=np.intp),
                                         axis=1),
                      trunc_next)
    radius = 0.5 * (trunc_sorted + r_next)
    sector = 0.5 * radius * radius * gaps
    valid = col < deg[:, None]
    sector = np.where(valid, sector, 0.0)

    area = sector.sum(axis=1)
    # replace the largest exterior gap of boundary robots by the average
    # of the remaining sectors
    gstar = np.argmax(np.where(valid, gaps, -1.0), axis=1)
    rows_all = np.arange(n)
    big = sector[rows_all, gstar]
    rest_mean = np.divide(area - big, np.maximum(deg - 1, 1),
                          out=np.zeros(n), where=deg > 1)
    # single neighbor: fall back to a nominal hex-lattice sector
    nominal = 0.5 * radius[rows_all, gstar] ** 2 * (math.pi / 3.0)
    repl = np.where(deg > 1, rest_mean, nominal)
    fix = on_boundary & (deg >= 1)
    area = np.where(fix, area - big + repl, area)
    area[deg == 0] = math.pi * range_ * range_
    return area


def observable_area(self: RobotState, views, boundary: BoundaryInfo,
                    range_: float, body_radius: float) -> float:
    """Per-robot observable area over the full neighborhood."""
    if not views:
        return math.pi * range_ * range_
    rel_pos = np.array([[v.relative_position.x, v.relative_position.y] for v in views])
    mask = np.ones((1, len(views)), dtype=bool)
    return float(observable_area_batch(rel_pos[None], mask,
                                       np.array([boundary.on_boundary]),
                                       range_, body_radius)[0])


def origin_density_batch(rel_pos: np.ndarray, mask: np.ndarray, area: np.ndarray,
                         body_radius: float, margin: float) -> np.ndarray:
    """Origin density: weighted neighbor count over observable area;
    neighbors within collision range count double."""
    dist = np.linalg.norm(rel_pos, axis=2)
    weight = np.where(dist < 2.0 * body_radius + margin, 2.0, 1.0)
    count = (weight * mask).sum(axis=1)
    return count / area


def density_force_batch(rel_pos: np.ndarray, mask: np.ndarray, nb_rho: np.ndarray,
                        target: float, range_: float,
                        on_boundary: np.ndarray) -> np.ndarray:
    """Density distribution force over the full neighborhood.

    Per neighbor: direction toward it, with length equal to the distance
    when the neighbor's density is at or below target, else range minus
    distance, times phi(rho - target).  Boundary robots get zero.
    """
    dist = np.linalg.norm(rel_pos, axis=2)
    dist_safe = np.maximum(dist, 1e-12)
    unit = rel_pos / dist_safe[..., None]
    excess = nb_rho - target
    length = np.where(excess <= 0.0, dist, range_ - dist)
    term = unit * (length * phi(excess) * mask)[..., None]
    out = term.sum(axis=1)
    out[on_boundary] = 0.0
    return out


def density_force(self: RobotState, views, target: float, range_: float,
                  boundary: BoundaryInfo) -> Vec2:
    """Per-robot density force from the neighbors' averaged densities."""
    if boundary.on_boundary or not views:
        return Vec2(0.0, 0.0)
    rel_pos = np.array([[v.relative_position.x, v.relative_position.y] for v in views])
    rho = np.array([v.published.rho for v in views])
    mask = np.ones((1, len(views)), dtype=bool)
    out = density_force_batch(rel_pos[None], mask, rho[None], target, range_,
                              np.array([False]))
    return Vec2.from_array(out[0])
