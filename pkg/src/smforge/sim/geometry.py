"""Sensing geometry: forward raycasts, neighbor queries, beacon occlusion.

All queries read a frozen world snapshot; none mutate anything. The
forward ray has unlimited range; the arena is closed, so it always hits a
wall when no robot disc is in the way. A tie between a robot hit and a
wall hit at the same range resolves to the robot.
"""

from __future__ import annotations

import math

import numpy as np

from .world import World

_EPS = 1e-9

HIT_ROBOT = "robot"
HIT_WALL = "wall"


def raycast_all(world: World) -> list[str]:
    """Forward line-of-sight hit type for every robot (vectorized)."""
    n = world.n_robots
    x, y = world.x, world.y
    dx = np.cos(world.theta)
    dy = np.sin(world.theta)

    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(
            dx > _EPS, (world.arena_w - x) / dx,
            np.where(dx < -_EPS, -x / dx, np.inf),
        )
        ty = np.where(
            dy > _EPS, (world.arena_h - y) / dy,
            np.where(dy < -_EPS, -y / dy, np.inf),
        )
    t_wall = np.minimum(tx, ty)

    if n > 1:
        # mx[i, j] = center of j relative to origin of ray i
        mx = x[None, :] - x[:, None]
        my = y[None, :] - y[:, None]
        b = dx[:, None] * mx + dy[:, None] * my
        c = mx * mx + my * my - world.body_radius**2
        disc = b * b - c
        with np.errstate(invalid="ignore"):
            s = np.sqrt(np.maximum(disc, 0.0))
        near = b - s
        far = b + s
        t = np.where(near > _EPS, near, np.where(far > _EPS, far, np.inf))
        t = np.where(disc >= 0.0, t, np.inf)
        np.fill_diagonal(t, np.inf)
        t_robot = t.min(axis=1)
    else:
        t_robot = np.full(n, np.inf)

    return [
        HIT_ROBOT if t_robot[i] <= t_wall[i] else HIT_WALL for i in range(n)
    ]


def raycast_line_of_sight(world: World, robot_idx: int) -> str:
    """Hit type ("robot" | "wall") of one robot's forward ray."""
    return raycast_all(world)[robot_idx]


def neighbors_within(
    world: World, robot_idx: int, radius: float
) -> list[tuple[float, float]]:
    """(range, bearing) of robots within center distance `radius`,
    excluding self, sorted by range then index. Bearings in (-pi, pi]."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    ox, oy = float(world.x[robot_idx]), float(world.y[robot_idx])
    heading = float(world.theta[robot_idx])
    found: list[tuple[float, int, float]] = []
    for j in range(world.n_robots):
        if j == robot_idx:
            continue
        dx = float(world.x[j]) - ox
        dy = float(world.y[j]) - oy
        rng = math.hypot(dx, dy)
        if rng <= radius:
            bearing = math.pi - (math.pi - (math.atan2(dy, dx) - heading)) % math.tau
            found.append((rng, j, bearing))
    found.sort(key=lambda t: (t[0], t[1]))
    return [(rng, bearing) for rng, _, bearing in found]


def is_illuminated(world: World, robot_idx: int) -> bool:
    """True iff no other robot's disc blocks the beacon-to-robot segment."""
    if world.beacon is None:
        raise ValueError("no beacon configured")
    bx, by = world.beacon
    cx, cy = float(world.x[robot_idx]), float(world.y[robot_idx])
    wx, wy = cx - bx, cy - by
    seg_len2 = wx * wx + wy * wy
    r = world.body_radius
    for j in range(world.n_robots):
        if j == robot_idx:
            continue
        px, py = float(world.x[j]) - bx, float(world.y[j]) - by
        if seg_len2 > 0:
            t = min(max((px * wx + py * wy) / seg_len2, 0.0), 1.0)
        else:
            t = 0.0
        qx, qy = px - t * wx, py - t * wy
        if math.hypot(qx, qy) < r:
            return False
    return True


def illumination_all(world: World) -> list[bool]:
    """Per-robot beacon visibility (vectorized form of is_illuminated)."""
    if world.beacon is None:
        raise ValueError("no beacon configured")
    n = world.n_robots
    bx, by = world.beacon
    wx = world.x - bx          # beacon -> target segment, per target i
    wy = world.y - by
    seg_len2 = wx * wx + wy * wy
    px = world.x - bx          # beacon -> blocker, per blocker j
    py = world.y - by
    # dot[i, j] = (blocker j) . (segment i)
    dot = wx[:, None] * px[None, :] + wy[:, None] * py[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(seg_len2[:, None] > 0, dot / seg_len2[:, None], 0.0)
    t = np.clip(t, 0.0, 1.0)
    qx = px[None, :] - t * wx[:, None]
    qy = py[None, :] - t * wy[:, None]
    blocked = qx * qx + qy * qy < world.body_radius**2
    np.fill_diagonal(blocked, False)
    return [not blocked[i].any() for i in range(n)]
