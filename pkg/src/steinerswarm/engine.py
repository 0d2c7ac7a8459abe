"""Fixed-step 60 Hz simulation engine: force aggregation per strategy,
kinematic integration with velocity/acceleration caps, scripted leader
trajectories, and permanent random failures.

A trial is a pure function of (config, seed): the failure stream uses a
counter-based generator keyed by (seed, tick) so adding or removing
behaviors never perturbs which robots die when.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dc_fields
from typing import Optional

import numpy as np

from . import base_behavior as bb
from . import leader as ld
from . import stability as st
from .core import LeaderRecord, PublicVars, RobotState
from .geometry import CommGraph, Vec2, build_comm_graph, gabriel_reduce, padded_neighbors
from .metrics import is_connected

STRATEGIES = ("base", "lead", "all")


class ConfigError(ValueError):
    """A named configuration key failed validation."""


@dataclass
class SwarmConfig:
    # population and physics
    n: int = 100
    leaders: int = 3
    range: float = 1.2                 # communication range, m
    body_diameter: float = 0.1        # robot body, m
    v_max: float = 1.0                # m/s
    leader_v_max: float = 0.25        # m/s
    a_max: float = 2.0                # m/s^2
    turn_rate_max: float = 6.2832     # rad/s cap on heading changes
    tick_rate: int = 60               # Hz
    # trial protocol
    failure_rate: float = 0.0         # death probability per robot per second
    strategy: str = "all"
    seed: int = 0
    max_seconds: float = 45.0
    sample_every: int = 60            # ticks between metric samples
    # initial placement and leader scripting
    init_jitter: float = 0.04         # m, uniform jitter on the hex lattice
    leader_ring_frac: float = 0.5     # leaders start at this fraction of the disk radius
    leader_speed: float = 0.25        # m/s along the outward bearing
    leader_jitter_deg: float = 15.0   # per-leader outward bearing jitter
    # flocking
    spacing: float = 0.65
    attraction: float = 20.0
    repulsion: float = 60.0
    consensus: float = 10.0
    bump_h: float = 0.6
    response: float = 1.0
    # boundary detection
    theta_b_deg: float = 100.0
    hole_max_hops: int = 8
    # leader forces
    pursuit_midpoint: float = 5.0
    pursuit_slope: float = 1.5
    direction_mix: float = 0.5
    lonely_min_neighbors: int = 3
    lonely_range_hops: float = 5.0
    lonely_decay: float = 0.7
    lonely_gain: float = 2.0
    # stability improvement
    slack: int = 2
    compression_gain: float = 0.2
    target_density: float = 0.0       # 0 = hex lattice value for `spacing`
    collision_margin: float = 0.02
    # behavior weights in the force sum
    w_flock: float = 1.0
    w_tension: float = 1.5
    w_lead: float = 64.0
    w_lonely: float = 6.0
    w_comp: float = 0.1
    w_dens: float = 0.35

    @property
    def body_radius(self) -> float:
        return self.body_diameter / 2.0

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate

    @property
    def theta_b(self) -> float:
        return math.radians(self.theta_b_deg)

    def resolved_target_density(self) -> float:
        if self.target_density > 0:
            return self.target_density
        return st.hex_observable_density(self.spacing, self.range, self.body_radius)

    def flock_params(self) -> bb.FlockParams:
        return bb.FlockParams(spacing=self.spacing, attraction=self.attraction,
                              repulsion=self.repulsion, consensus=self.consensus,
                              range_=self.range, bump_h=self.bump_h,
                              response=self.response)

    def leader_params(self) -> ld.LeaderParams:
        return ld.LeaderParams(pursuit_midpoint=self.pursuit_midpoint,
                               pursuit_slope=self.pursuit_slope,
                               direction_mix=self.direction_mix,
                               lonely_min_neighbors=self.lonely_min_neighbors,
                               lonely_range_hops=self.lonely_range_hops,
                               lonely_decay=self.lonely_decay,
                               lonely_gain=self.lonely_gain)

    def stability_params(self) -> st.StabilityParams:
        return st.StabilityParams(slack=self.slack,
                                  compression_gain=self.compression_gain,
                                  target_density=self.resolved_target_density(),
                                  collision_margin=self.collision_margin)

    def validate(self) -> "SwarmConfig":
        positives = ("n", "leaders", "range", "body_diameter", "v_max",
                     "leader_v_max", "a_max", "tick_rate", "max_seconds",
                     "sample_every", "spacing", "leader_speed")
        for key in positives:
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}")
        if not 0.0 <= self.failure_rate < 1.0:
            raise ConfigError(f"failure_rate must be in [0, 1), got {self.failure_rate}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not self.spacing < self.range:
            raise ConfigError(f"spacing must be below range, got {self.spacing}")
        if self.leaders >= self.n:
            raise ConfigError("leaders must be fewer than n")
        return self


def strategy_behaviors(strategy: str):
    """Ordered behavior names active under a strategy."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}")
    names = ["flocking", "boundary_tension"]
    if strategy in ("lead", "all"):
        names += ["leader_pull", "lonely_leader"]
    if strategy == "all":
        names += ["compression", "density"]
    return names


@dataclass
class LeaderScript:
    """Straight-line trajectories: start points plus constant velocities."""

    start: np.ndarray        # (L,2)
    velocity: np.ndarray     # (L,2), speeds already within the leader cap

    def positions(self, t: float) -> np.ndarray:
        return self.start + self.velocity * t

    @staticmethod
    def radial(start: np.ndarray, bearings: np.ndarray, speed: float) -> "LeaderScript":
        vel = speed * np.stack([np.cos(bearings), np.sin(bearings)], axis=1)
        return LeaderScript(start=start.copy(), velocity=vel)


@dataclass
class PublishedArrays:
    """One-hop bulletin state, committed at the end of each tick."""

    lead_dist: np.ndarray    # (n,L) hops, inf = unreachable
    lead_vel: np.ndarray     # (n,L,2)
    lead_dir: np.ndarray     # (n,L,2)
    boundary: np.ndarray     # (n,) bool
    b: np.ndarray            # (n,)
    t: np.ndarray            # (n,)
    h: np.ndarray            # (n,)
    rho0: np.ndarray         # (n,)
    rho: np.ndarray          # (n,)


@dataclass
class World:
    config: SwarmConfig
    positions: np.ndarray
    velocities: np.ndarray
    headings: np.ndarray
    alive: np.ndarray
    leader_idx: np.ndarray
    script: LeaderScript
    published: PublishedArrays
    failure_seed: int
    tick: int = 0
    connected: bool = True
    graph: Optional[CommGraph] = None
    on_boundary: Optional[np.ndarray] = None
    hole_flag: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def is_leader(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[self.leader_idx] = True
        return m

    @property
    def alive_count(self) -> int:
        return int(self.alive.sum())

    @property
    def time(self) -> float:
        return self.tick * self.config.dt

    def states(self):
        """Materialize per-robot RobotState objects (contract-level view)."""
        out = []
        lead_ids = list(self.leader_idx)
        p = self.published
        for i in range(self.n):
            leaders = {}
            for c, lid in enumerate(lead_ids):
                leaders[int(lid)] = LeaderRecord(
                    int(lid), float(p.lead_dist[i, c]),
                    Vec2.from_array(p.lead_vel[i, c]),
                    Vec2.from_array(p.lead_dir[i, c]))
            pub = PublicVars(leaders=leaders, boundary_flag=bool(p.boundary[i]),
                             b=float(p.b[i]), t=float(p.t[i]), h=float(p.h[i]),
                             rho0=float(p.rho0[i]), rho=float(p.rho[i]))
            out.append(RobotState(
                id=i, position=Vec2.from_array(self.positions[i]),
                velocity=Vec2.from_array(self.velocities[i]),
                heading=float(self.headings[i]), alive=bool(self.alive[i]),
                is_leader=bool(i in set(int(x) for x in self.leader_idx)),
                published=pub))
        return out


def hex_disk(n: int, spacing: float) -> np.ndarray:
    """The n hex-lattice points nearest the origin, spacing apart."""
    m = int(math.ceil(math.sqrt(n))) + 3
    pts = []
    for q in range(-m, m + 1):
        for r in range(-m, m + 1):
            x = spacing * (q + r / 2.0)
            y = spacing * (math.sqrt(3.0) / 2.0) * r
            pts.append((x * x + y * y, x, y))
    pts.sort()
    return np.array([(x, y) for _, x, y in pts[:n]])


def init_world(config: SwarmConfig) -> World:
    """Seeded initial world: jittered hex disk with leaders on an inner ring."""
    config.validate()
    n, L = config.n, config.leaders
    ss = np.random.SeedSequence([config.seed, 0])
    rng = np.random.Generator(np.random.Philox(ss))

    pos = hex_disk(n, config.spacing)
    pos = pos + rng.uniform(-config.init_jitter, config.init_jitter, size=(n, 2))
    disk_radius = float(np.linalg.norm(pos, axis=1).max())

    orient = rng.uniform(0.0, 2.0 * math.pi)
    bearings = orient + 2.0 * math.pi * np.arange(L) / L
    jitter = np.radians(rng.uniform(-config.leader_jitter_deg,
                                    config.leader_jitter_deg, size=L))
    targets = config.leader_ring_frac * disk_radius * np.stack(
        [np.cos(bearings), np.sin(bearings)], axis=1)

    leader_idx = []
    taken = np.zeros(n, dtype=bool)
    for tgt in targets:
        d = np.linalg.norm(pos - tgt, axis=1)
        d[taken] = np.inf
        j = int(np.argmin(d))
        taken[j] = True
        leader_idx.append(j)
    leader_idx = np.array(leader_idx, dtype=np.intp)

    speed = min(config.leader_speed, config.leader_v_max)
    script = LeaderScript.radial(pos[leader_idx], bearings + jitter, speed)

    target_rho = config.resolved_target_density()
    sentinel = float(n)
    pub = PublishedArrays(
        lead_dist=np.full((n, L), np.inf),
        lead_vel=np.zeros((n, L, 2)),
        lead_dir=np.zeros((n, L, 2)),
        boundary=np.zeros(n, dtype=bool),
        b=np.full(n, sentinel),
        t=np.zeros(n),
        h=np.zeros(n),
        rho0=np.full(n, target_rho),
        rho=np.full(n, target_rho),
    )
    pub.lead_dist[leader_idx, np.arange(L)] = 0.0

    fail_ss = np.random.SeedSequence([config.seed, 1])
    failure_seed = int(fail_ss.generate_state(1, dtype=np.uint64)[0])

    return World(config=config, positions=pos, velocities=np.zeros((n, 2)),
                 headings=np.zeros(n), alive=np.ones(n, dtype=bool),
                 leader_idx=leader_idx, script=script, published=pub,
                 failure_seed=failure_seed)


def failure_tick_probability(failure_rate: float, tick_rate: int) -> float:
    """Per-tick death probability matching a per-second failure rate."""
    return 1.0 - (1.0 - failure_rate) ** (1.0 / tick_rate)


def inject_failures(alive: np.ndarray, is_leader: np.ndarray, failure_rate: float,
                    tick_rate: int, tick: int, failure_seed: int) -> np.ndarray:
    """Kill alive non-leaders independently with the per-tick probability.

    Deterministic in (failure_seed, tick): the draw for a tick never
    depends on anything the behaviors did.
    """
    if failure_rate <= 0.0:
        return alive
    p = failure_tick_probability(failure_rate, tick_rate)
    gen = np.random.Generator(np.random.Philox(key=failure_seed,
                                               counter=[0, 0, 0, tick]))
    u = gen.random(len(alive))
    return alive & (is_leader | (u >= p))


def _clamp_rows(v: np.ndarray, limit) -> np.ndarray:
    norm = np.linalg.norm(v, axis=1, keepdims=True)
    factor = np.minimum(1.0, limit / np.maximum(norm, 1e-12))
    return v * factor


def step(world: World) -> World:
    """Advance the world by one tick; sets world.connected for this tick."""
    cfg = world.config
    n = world.n
    dt = cfg.dt
    sentinel = float(n)
    pub = world.published
    alive = world.alive
    is_leader = world.is_leader
    behaviors = strategy_behaviors(cfg.strategy)

    graph = build_comm_graph(world.positions, alive, cfg.range, cfg.body_radius)
    gabriel_reduce(graph, world.positions, alive)
    world.graph = graph
    world.connected = is_connected(graph, alive)

    idx, mask = padded_neighbors(graph.adjacency)
    gidx, gmask = padded_neighbors(graph.gabriel)
    rel_pos = world.positions[idx] - world.positions[:, None, :]
    rel_vel = world.velocities[idx] - world.velocities[:, None, :]
    grel_pos = world.positions[gidx] - world.positions[:, None, :]

    # boundary detection on the full neighborhood, holes filtered globally
    on_b, pair, _ = bb.boundary_batch(rel_pos, mask, idx, cfg.theta_b)
    on_b &= alive
    hole = bb.flag_small_holes(on_b, pair, cfg.hole_max_hops)
    accepted = on_b & ~hole
    world.on_boundary = on_b
    world.hole_flag = hole

    # distributed field updates from previous-tick bulletins
    lp = cfg.leader_params()
    lead_dist, lead_vel, lead_dir = ld.update_leader_fields_batch(
        rel_pos, mask, idx, pub.lead_dist[idx], pub.lead_vel[idx],
        pub.lead_dir[idx], world.leader_idx, world.velocities,
        mix=cfg.direction_mix)

    b = st.update_b_batch(pub.b[gidx], gmask, accepted, pub.b, sentinel)
    t, h = st.update_t_h_batch(b, pub.t[gidx], pub.h[gidx], gmask, pub.h,
                               float(cfg.slack), sentinel)

    target_rho = cfg.resolved_target_density()
    area = st.observable_area_batch(rel_pos, mask, on_b, cfg.range, cfg.body_radius)
    rho0 = st.origin_density_batch(rel_pos, mask, area, cfg.body_radius,
                                   cfg.collision_margin)
    deg = mask.sum(axis=1)
    rho = (rho0 + (pub.rho0[idx] * mask).sum(axis=1)) / (deg + 1.0)

    # force aggregation (alive non-leaders only)
    ext = np.zeros((n, 2))
    ext += cfg.w_tension * bb.tension_force_batch(world.positions, on_b, pair, hole)
    if "leader_pull" in behaviors:
        pull = ld.leader_pull_batch(lead_dist, lead_vel, lead_dir, lp)
        reach = (np.isfinite(lead_dist) & (lead_dist >= 1.0)).any(axis=1)
        # steering toward the blended pull, damped in proportion to how
        # decisive the blend is: robots balanced between antagonistic
        # leaders (pull near zero) are left free instead of being braked
        gate = np.minimum(1.0, np.linalg.norm(pull, axis=1) / cfg.leader_v_max)
        steer = gate[:, None] * (pull - world.velocities)
        ext += cfg.w_lead * np.where(reach[:, None], steer, 0.0)
    if "lonely_leader" in behaviors:
        lonely = deg[world.leader_idx] < cfg.lonely_min_neighbors
        ext += cfg.w_lonely * ld.lonely_attraction_batch(lead_dist, lead_dir,
                                                         lonely, lp)
    if "compression" in behaviors:
        ext += cfg.w_comp * st.compression_force_batch(
            rel_pos, mask, t, accepted, cfg.compression_gain)
    if "density" in behaviors:
        # applied with negative sign: attraction toward underfull neighbors,
        # repulsion from overfull ones
        ext -= cfg.w_dens * st.density_force_batch(rel_pos, mask, pub.rho[idx],
                                                   target_rho, cfg.range, on_b)

    ext_norm = np.linalg.norm(ext, axis=1)
    flock = bb.flocking_force_batch(rel_pos, rel_vel, mask, cfg.flock_params(),
                                    ext_norm=ext_norm)
    force = cfg.w_flock * flock + ext

    # integration: semi-implicit Euler with acceleration and velocity caps
    mover = alive & ~is_leader
    accel = _clamp_rows(force, cfg.a_max)
    vel = world.velocities + accel * dt
    vel = _clamp_rows(vel, cfg.v_max)
    vel[~mover] = 0.0

    # leaders follow the script exactly, clamped to their speed cap
    t_now = world.tick * dt
    lp_next = world.script.positions(t_now + dt)
    lvel = _clamp_rows((lp_next - world.positions[world.leader_idx]) / dt,
                       cfg.leader_v_max)
    vel[world.leader_idx] = lvel

    world.velocities = vel
    world.positions = world.positions + vel * dt

    # headings track velocity direction, capped turn rate
    speed = np.linalg.norm(vel, axis=1)
    moving = speed > 1e-9
    target = np.where(moving, np.arctan2(vel[:, 1], vel[:, 0]), world.headings)
    delta = (target - world.headings + math.pi) % (2.0 * math.pi) - math.pi
    max_turn = cfg.turn_rate_max * dt
    world.headings = world.headings + np.clip(delta, -max_turn, max_turn)

    # commit bulletins for next tick
    lead_dist[world.leader_idx, np.arange(len(world.leader_idx))] = 0.0
    world.published = PublishedArrays(
        lead_dist=lead_dist, lead_vel=lead_vel, lead_dir=lead_dir,
        boundary=on_b, b=b, t=t, h=h, rho0=rho0, rho=rho)

    world.alive = inject_failures(world.alive, is_leader, cfg.failure_rate,
                                  cfg.tick_rate, world.tick, world.failure_seed)
    world.tick += 1
    return world


def config_to_dict(config: SwarmConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in dc_fields(SwarmConfig)}


def config_from_dict(values: dict) -> SwarmConfig:
    known = {f.name: f for f in dc_fields(SwarmConfig)}
    kwargs = {}
    for key, val in values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[key] = val
    return SwarmConfig(**kwargs).validate()
