"""Deterministic SVG frame rendering: robots as circles, communication
edges, Gabriel edges highlighted, boundary robots marked, leaders
colored.  Identical input state always yields identical bytes, so frames
re-rendered from a dumped trace match the live render exactly.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import base_behavior as bb
from .geometry import build_comm_graph, gabriel_reduce, padded_neighbors

SCALE = 60.0          # pixels per meter
MARGIN = 1.0          # meters around the swarm bounding box


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_svg(positions, alive, leader_idx, range_: float, body_radius: float,
               theta_b: float, hole_max_hops: int) -> str:
    """Render one frame from raw state; graph and boundary are recomputed."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    alive = np.asarray(alive, dtype=bool)
    n = len(pos)
    leader_mask = np.zeros(n, dtype=bool)
    leader_mask[list(leader_idx)] = True

    if n and alive.any():
        lo = pos[alive].min(axis=0) - MARGIN
        hi = pos[alive].max(axis=0) + MARGIN
    else:
        lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    width = (hi[0] - lo[0]) * SCALE
    height = (hi[1] - lo[1]) * SCALE

    def px(p):
        # y flipped so +y is up
        return (p[0] - lo[0]) * SCALE, (hi[1] - p[1]) * SCALE

    graph = build_comm_graph(pos, alive, range_, body_radius)
    gabriel_reduce(graph, pos, alive)
    on_boundary = np.zeros(n, dtype=bool)
    if alive.sum() >= 1:
        idx, mask = padded_neighbors(graph.adjacency)
        rel = pos[idx] - pos[:, None, :]
        on_b, pair, _ = bb.boundary_batch(rel, mask, idx, theta_b)
        on_boundary = on_b & alive

    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" '
               f'width="{_fmt(width)}" height="{_fmt(height)}" '
               f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">')
    out.append('<rect width="100%" height="100%" fill="white"/>')

    for layer, color, w in (("adjacency", "#c8c8c8", 0.8), ("gabriel", "#3c78d8", 1.4)):
        adj = getattr(graph, layer)
        out.append(f'<g stroke="{color}" stroke-width="{w}">')
        for u, v in np.argwhere(np.triu(adj, 1)):
            x1, y1 = px(pos[u])
            x2, y2 = px(pos[v])
            out.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
                       f'x2="{_fmt(x2)}" y2="{_fmt(y2)}"/>')
        out.append('</g>')

    out.append('<g>')
    r_px = body_radius * SCALE
    for i in range(n):
        if not alive[i]:
            continue
        x, y = px(pos[i])
        if leader_mask[i]:
            fill, stroke = "#cc0000", "#660000"
        elif on_boundary[i]:
            fill, stroke = "#ffd966", "#b45f06"
        else:
            fill, stroke = "#222222", "none"
        out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r_px)}" '
                   f'fill="{fill}" stroke="{stroke}"/>')
    out.append('</g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"


def frame_state(world, tick: int) -> dict:
    """JSON-serializable state sufficient to re-render the frame."""
    cfg = world.config
    return {
        "tick": tick,
        "range": cfg.range,
        "body_radius": cfg.body_radius,
        "theta_b_deg": cfg.theta_b_deg,
        "hole_max_hops": cfg.hole_max_hops,
        "positions": [[float(x), float(y)] for x, y in world.positions],
        "alive": [bool(a) for a in world.alive],
        "leader_idx": [int(i) for i in world.leader_idx],
    }


def render_state(state: dict) -> str:
    return render_svg(state["positions"], state["alive"], state["leader_idx"],
                      state["range"], state["body_radius"],
                      math.radians(state["theta_b_deg"]), state["hole_max_hops"])


def dump_frame(world, tick: int, svg_path, state_path=None) -> None:
    """Write the SVG for the current world, optionally with its state dump."""
    state = frame_state(world, tick)
    svg = render_state(state)
    with open(svg_path, "w") as f:
        f.write(svg)
    if state_path is not None:
        with open(state_path, "w") as f:
            json.dump(state, f, sort_keys=True)
            f.write("\n")
