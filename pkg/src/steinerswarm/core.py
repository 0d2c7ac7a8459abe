"""Robot state, the one-hop public-variable bulletin model, and the
per-robot neighborhood view used by all behaviors.

Published values visible at tick T were computed at tick T-1; behaviors
receive only NeighborView lists, never global state, so every per-robot
quantity is local by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import CommGraph, Vec2

UNREACHABLE = math.inf


@dataclass
class LeaderRecord:
    """One leader's propagated public variables as seen at a robot."""

    leader_id: int
    distance: float = UNREACHABLE        # hop count, inf when unreachable
    velocity: Vec2 = Vec2(0.0, 0.0)      # m/s, propagated leader velocity
    direction: Vec2 = Vec2(0.0, 0.0)     # unit vector toward the leader


@dataclass
class PublicVars:
    """Values a robot broadcast to its one-hop neighbors last tick."""

    leaders: dict = field(default_factory=dict)   # leader_id -> LeaderRecord
    boundary_flag: bool = False
    b: float = 0.0          # hops from boundary
    t: float = 0.0          # local thickness, hops
    h: float = 0.0          # circle-center distance, hops
    rho0: float = 0.0       # origin density, robots/m^2
    rho: float = 0.0        # neighbor-averaged density, robots/m^2


@dataclass
class RobotState:
    id: int
    position: Vec2
    velocity: Vec2 = Vec2(0.0, 0.0)
    heading: float = 0.0
    alive: bool = True
    is_leader: bool = False
    published: PublicVars = field(default_factory=PublicVars)


@dataclass
class NeighborView:
    """What one robot perceives about one neighbor for the current tick."""

    neighbor_id: int
    relative_position: Vec2       # in the observer's frame, meters
    relative_orientation: float   # radians
    published: PublicVars         # snapshot from the previous tick
    in_gabriel: bool = False
    relative_velocity: Vec2 = Vec2(0.0, 0.0)  # sensed, observer frame


def frame_transform(view: NeighborView, vector: Vec2) -> Vec2:
    """Rotate a vector from the neighbor's frame into the observer's frame.

    Published vectors are directions and velocities, so only rotation
    applies, no translation.
    """
    return vector.rotated(view.relative_orientation)


def snapshot_neighborhoods(states, graph: CommGraph):
    """Build each alive robot's list of NeighborViews from the graph.

    Published values come from the states as given, i.e. whatever was
    committed at the previous tick; dead robots see and provide nothing.
    """
    views = [[] for _ in states]
    for i, s in enumerate(states):
        if not s.alive:
            continue
        for j in graph.neighbors(i):
            nb = states[j]
            rel = (nb.position - s.position).rotated(-s.heading)
            views[i].append(NeighborView(
                neighbor_id=nb.id,
                relative_position=rel,
                relative_orientation=nb.heading - s.heading,
                published=nb.published,
                in_gabriel=bool(graph.gabriel[i, j]),
                relative_velocity=(nb.velocity - s.velocity).rotated(-s.heading),
            ))
    return views
