"""Leader force stack: hop-count field propagation of per-leader public
variables, the distance-blended pull force, and lonely-leader attraction.

Fields self-stabilize: iterating the update on a static graph converges
to BFS hop distances within graph-diameter ticks and re-converges after
robot deaths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import UNREACHABLE, LeaderRecord, RobotState
from .geometry import Vec2


@dataclass
class LeaderParams:
    pursuit_midpoint: float = 5.0    # hops at which pursuit and matching balance
    pursuit_slope: float = 1.5       # logistic transition width, hops
    direction_mix: float = 0.5       # own-bearing share when merging directions
    lonely_min_neighbors: int = 3    # below this a leader broadcasts loneliness
    lonely_range_hops: float = 5.0   # attraction reach
    lonely_decay: float = 0.7        # exponential decay per hop
    lonely_gain: float = 2.0         # attraction magnitude at the leader


def pursuit_weight(dist, params: LeaderParams):
    """Smoothly rises from 0 (velocity matching) to 1 (pursuit) with hops."""
    d = np.asarray(dist, dtype=float)
    return 1.0 / (1.0 + np.exp(-(d - params.pursuit_midpoint) / params.pursuit_slope))


def update_leader_fields_batch(rel_pos, mask, nbr_idx, nb_dist, nb_vel, nb_dir,
                               leader_rows, own_vel, mix: float = 0.5):
    """One synchronous round of the per-leader field update.

    Shapes: rel_pos (n,K,2), mask (n,K), nbr_idx (n,K), nb_dist (n,K,L),
    nb_vel/nb_dir (n,K,L,2), leader_rows (L,) robot indices, own_vel (n,2).
    Returns (dist (n,L), vel (n,L,2), dirn (n,L,2)).
    """
    n, K, L = nb_dist.shape
    big_id = n + 1

    dist_m = np.where(mask[..., None], nb_dist, np.inf)
    dmin = dist_m.min(axis=1)                                   # (n,L)
    reachable = np.isfinite(dmin)
    # predecessor: among neighbors at the minimum, the lowest id
    cand = dist_m == dmin[:, None, :]
    id_key = np.where(cand, nbr_idx[..., None], big_id)
    pred = np.argmin(id_key, axis=1)                            # (n,L) slot index

    rows = np.arange(n)[:, None]
    pred_vel = nb_vel[rows, pred, np.arange(L)[None, :]]        # (n,L,2)
    pred_dir = nb_dir[rows, pred, np.arange(L)[None, :]]
    to_pred = rel_pos[rows, pred]                               # (n,L,2)
    tp_norm = np.linalg.norm(to_pred, axis=2, keepdims=True)
    to_pred = np.divide(to_pred, tp_norm, out=np.zeros_like(to_pred),
                        where=tp_norm > 0)

    pred_is_leader = dmin == 0
    mixed = mix * to_pred + (1.0 - mix) * pred_dir
    mx_norm = np.linalg.norm(mixed, axis=2, keepdims=True)
    mixed = np.divide(mixed, mx_norm, out=np.zeros_like(mixed), where=mx_norm > 0)
    dirn = np.where(pred_is_leader[..., None], to_pred, mixed)

    dist = np.where(reachable, dmin + 1.0, np.inf)
    vel = np.where(reachable[..., None], pred_vel, 0.0)
    dirn = np.where(reachable[..., None], dirn, 0.0)

    # leaders own their field: distance 0, their own velocity, no direction
    lcol = np.arange(L)
    dist[leader_rows, lcol] = 0.0
    vel[leader_rows, lcol] = own_vel[leader_rows]
    dirn[leader_rows, lcol] = 0.0
    return dist, vel, dirn


def update_leader_field(self: RobotState, views, leader_ids, mix: float = 0.5):
    """Per-robot field update from a NeighborView list.

    Returns {leader_id: LeaderRecord} computed from the neighbors'
    previous-tick records; unreachable leaders keep distance = inf.
    """
    L = len(leader_ids)
    out = {}
    if self.is_leader and self.id in leader_ids:
        out[self.id] = LeaderRecord(self.id, 0.0, self.velocity, Vec2(0.0, 0.0))
    for lid in leader_ids:
        if lid in out:
            continue
        best = None
        for v in views:
            rec = v.published.leaders.get(lid)
            d = rec.distance if rec is not None else UNREACHABLE
            if best is None or (d, v.neighbor_id) < (best[0], best[1].neighbor_id):
                best = (d, v, rec)
        if best is None or not math.isfinite(best[0]):
            out[lid] = LeaderRecord(lid)
            continue
        d, view, rec = best
        to_pred = view.relative_position.normalized()
        if d == 0:
            direction = to_pred
        else:
            direction = (mix * to_pred + (1.0 - mix) * rec.direction).normalized()
        out[lid] = LeaderRecord(lid, d + 1.0, rec.velocity, direction)
    return out


def leader_pull_batch(dist, vel, dirn, params: LeaderParams):
    """Blended leader force for every robot.

    Per leader: sigma(d) * direction scaled to |velocity| plus
    (1 - sigma(d)) * velocity; blended with weights 1/d normalized over
    reachable leaders.  Rows with no reachable leader get zero.
    """
    reach = np.isfinite(dist) & (dist >= 1.0)
    sigma = pursuit_weight(dist, params)
    speed = np.linalg.norm(vel, axis=2, keepdims=True)
    c = sigma[..., None] * dirn * speed + (1.0 - sigma)[..., None] * vel

    w = np.where(reach, 1.0 / np.maximum(dist, 1.0), 0.0)
    wsum = w.sum(axis=1, keepdims=True)
    weights = np.divide(w, wsum, out=np.zeros_like(w), where=wsum > 0)
    return (c * weights[..., None]).sum(axis=1)


def leader_pull_force(self: RobotState, fields, params: LeaderParams) -> Vec2:
    """Per-robot blended leader force from {leader_id: LeaderRecord}."""
    recs = [r for r in fields.values() if math.isfinite(r.distance) and r.distance >= 1]
    if not recs:
        return Vec2(0.0, 0.0)
    dist = np.array([[r.distance for r in recs]])
    vel = np.array([[[r.velocity.x, r.velocity.y] for r in recs]])
    dirn = np.array([[[r.direction.x, r.direction.y] for r in recs]])
    return Vec2.from_array(leader_pull_batch(dist, vel, dirn, params)[0])


def lonely_attraction_batch(dist, dirn, lonely, params: LeaderParams):
    """Attraction toward leaders flagged lonely, decaying exponentially
    with hop distance and limited to lonely_range_hops."""
    m = (lonely[None, :] & np.isfinite(dist) & (dist >= 1.0)
         & (dist <= params.lonely_range_hops))
    mag = params.lonely_gain * np.exp(-params.lonely_decay * dist)
    return (dirn * (mag * m)[..., None]).sum(axis=1)


def lonely_leader_attraction(record: LeaderRecord, leader_neighbor_count: int,
                             params: LeaderParams) -> Vec2:
    """Per-robot contribution of one leader's loneliness attraction."""
    if leader_neighbor_count >= params.lonely_min_neighbors:
        return Vec2(0.0, 0.0)
    d = record.distance
    if not math.isfinite(d) or d > params.lonely_range_hops:
        return Vec2(0.0, 0.0)
    return record.direction * (params.lonely_gain * math.exp(-params.lonely_decay * d))
