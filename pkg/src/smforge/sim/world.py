"""Arena state: robot poses, wheel commands, physics stepping, collisions.

The world is an axis-aligned rectangle [0, w] x [0, h] with solid walls.
Robot state is stored in numpy arrays (one slot per robot); `body(i)` gives
a per-robot snapshot for callers that want one. Physics is explicit Euler
at `physics_dt`; a control cycle runs `control_dt / physics_dt` substeps,
each followed by collision resolution and wall clamping, so robot centers
never leave the arena inset by the body radius.

Collision resolution is sequential over overlapping pairs in ascending
(i, j) order: each overlap is split by an equal half-push along the center
line (coincident centers separate along +x). Up to 8 passes per substep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import (
    EPUCK_BODY_RADIUS_CM,
    EPUCK_MAX_SPEED_CMPS,
    EPUCK_WHEEL_BASE_CM,
    integrate_pose,
    normalize_angle,
)

_OVERLAP_EPS = 1e-9


@dataclass
class RobotBody:
    x: float
    y: float
    theta: float
    vl: float = 0.0
    vr: float = 0.0
    body_radius: float = EPUCK_BODY_RADIUS_CM
    wheel_base: float = EPUCK_WHEEL_BASE_CM
    max_wheel_speed: float = EPUCK_MAX_SPEED_CMPS

    def __post_init__(self):
        self.theta = normalize_angle(self.theta)
        self.set_wheel_speeds(self.vl, self.vr)

    def set_wheel_speeds(self, vl: float, vr: float) -> None:
        m = self.max_wheel_speed
        self.vl = min(max(vl, -m), m)
        self.vr = min(max(vr, -m), m)

    def integrated(self, dt: float) -> "RobotBody":
        x, y, theta = integrate_pose(
            self.x, self.y, self.theta, self.vl, self.vr, dt, self.wheel_base
        )
        return RobotBody(
            x, y, theta, self.vl, self.vr,
            self.body_radius, self.wheel_base, self.max_wheel_speed,
        )


class World:
    def __init__(
        self,
        arena_w: float,
        arena_h: float,
        n_robots: int,
        physics_dt: float = 0.01,
        control_dt: float = 0.1,
        beacon: tuple[float, float] | None = None,
        body_radius: float = EPUCK_BODY_RADIUS_CM,
        wheel_base: float = EPUCK_WHEEL_BASE_CM,
        max_wheel_speed: float = EPUCK_MAX_SPEED_CMPS,
        seed: int = 0,
    ):
        if physics_dt <= 0 or control_dt <= 0:
            raise ValueError("physics_dt and control_dt must be positive")
        substeps = control_dt / physics_dt
        if abs(substeps - round(substeps)) > 1e-9 or round(substeps) < 1:
            raise ValueError("control_dt must be a positive integer multiple of physics_dt")
        if arena_w <= 2 * body_radius or arena_h <= 2 * body_radius:
            raise ValueError("arena too small for the body radius")
        self.arena_w = float(arena_w)
        self.arena_h = float(arena_h)
        self.physics_dt = float(physics_dt)
        self.control_dt = float(control_dt)
        self.substeps = int(round(substeps))
        self.beacon = beacon
        self.body_radius = float(body_radius)
        self.wheel_base = float(wheel_base)
        self.max_wheel_speed = float(max_wheel_speed)
        self.seed = seed
        self.clock_s = 0.0
        self.x = np.zeros(n_robots)
        self.y = np.zeros(n_robots)
        self.theta = np.zeros(n_robots)
        self.vl = np.zeros(n_robots)
        self.vr = np.zeros(n_robots)
        ii, jj = np.triu_indices(n_robots, k=1)
        self._pair_i = ii
        self._pair_j = jj
        self._pair_i_list = ii.tolist()
        self._pair_j_list = jj.tolist()

    @property
    def n_robots(self) -> int:
        return len(self.x)

    def body(self, i: int) -> RobotBody:
        return RobotBody(
            float(self.x[i]), float(self.y[i]), float(self.theta[i]),
            float(self.vl[i]), float(self.vr[i]),
            self.body_radius, self.wheel_base, self.max_wheel_speed,
        )

    def place(self, i: int, x: float, y: float, theta: float) -> None:
        self.x[i] = x
        self.y[i] = y
        self.theta[i] = normalize_angle(theta)

    def set_wheels(self, i: int, vl: float, vr: float) -> None:
        m = self.max_wheel_speed
        self.vl[i] = min(max(vl, -m), m)
        self.vr[i] = min(max(vr, -m), m)

    def positions(self) -> np.ndarray:
        return np.stack([self.x, self.y], axis=1)

    # --- physics -------------------------------------------------------------

    def integrate_all(self, dt: float) -> None:
        v = (self.vl + self.vr) / 2.0
        omega = (self.vr - self.vl) / self.wheel_base
        self.x += v * np.cos(self.theta) * dt
        self.y += v * np.sin(self.theta) * dt
        self.theta = np.pi - (np.pi - (self.theta + omega * dt)) % (2.0 * np.pi)

    def resolve_collisions(self) -> None:
        r = self.body_radius
        min_d = 2.0 * r
        thresh2 = (min_d - _OVERLAP_EPS) ** 2
        w_hi = self.arena_w - r
        h_hi = self.arena_h - r
        for _ in range(8):
            moved = False
            dx = self.x[self._pair_i] - self.x[self._pair_j]
            dy = self.y[self._pair_i] - self.y[self._pair_j]
            hits = np.nonzero(dx * dx + dy * dy < thresh2)[0]
            if len(hits):
                moved = True
                xs = self.x.tolist()
                ys = self.y.tolist()
                pi, pj = self._pair_i_list, self._pair_j_list
                for k in hits.tolist():
                    i, j = pi[k], pj[k]
                    # positions may shift earlier in this pass: re-measure
                    ddx = xs[j] - xs[i]
                    ddy = ys[j] - ys[i]
                    d = math.hypot(ddx, ddy)
                    overlap = min_d - d
                    if overlap <= _OVERLAP_EPS:
                        continue
                    if d < _OVERLAP_EPS:
                        ux, uy = 1.0, 0.0
                    else:
                        ux, uy = ddx / d, ddy / d
                    push = overlap / 2.0
                    xs[i] -= ux * push
                    ys[i] -= uy * push
                    xs[j] += ux * push
                    ys[j] += uy * push
                self.x = np.asarray(xs)
                self.y = np.asarray(ys)
            if self._clamp_walls(r, w_hi, h_hi):
                moved = True
            if not moved:
                break

    def _clamp_walls(self, r: float, w_hi: float, h_hi: float) -> bool:
        moved = False
        if self.x.min() < r or self.x.max() > w_hi:
            np.clip(self.x, r, w_hi, out=self.x)
            moved = True
        if self.y.min() < r or self.y.max() > h_hi:
            np.clip(self.y, r, h_hi, out=self.y)
            moved = True
        return moved

    def physics_substep(self) -> None:
        self.integrate_all(self.physics_dt)
        self.resolve_collisions()

    def contains_all(self) -> bool:
        r = self.body_radius
        return bool(
            (self.x >= r).all()
            and (self.x <= self.arena_w - r).all()
            and (self.y >= r).all()
            and (self.y <= self.arena_h - r).all()
        )
