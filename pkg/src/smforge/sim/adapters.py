"""Platform adapter families binding the bundled controllers to the world.

An adapter is the per-robot PlatformBinding: it publishes the cycle's
events from a frozen sensor snapshot and turns operation calls into wheel
commands. A family owns the robots of one world and computes the shared
snapshot once per control cycle; the world does not move between sensing
and actuation, so every robot sees the same frozen state regardless of
index order.

Wheel commands latch: an adapter carries the previous command forward
unless an operation overwrites it this cycle.
"""

from __future__ import annotations

import math

import numpy as np

from ..runtime import PlatformBinding
from ..ast import Value
from .geometry import HIT_ROBOT, illumination_all, raycast_all
from .kinematics import body_to_wheel, normalize_angle
from .world import World


class AdapterError(Exception):
    pass


class _RobotAdapter(PlatformBinding):
    def __init__(self, family, robot_idx: int):
        self.family = family
        self.robot_idx = robot_idx
        self.pending_wheels: tuple[float, float] = (0.0, 0.0)

    @property
    def world(self) -> World:
        return self.family.world

    def begin_cycle(self) -> None:
        i = self.robot_idx
        self.pending_wheels = (float(self.world.vl[i]), float(self.world.vr[i]))

    def _set_body(self, v: float, omega: float) -> None:
        self.pending_wheels = body_to_wheel(
            v, omega, self.world.max_wheel_speed, self.world.wheel_base
        )

    def sample_events(self) -> set[str]:
        return set()


class AggregationFamily:
    """Line-of-sight platform: one forward raycast per robot per cycle."""

    REQUIRED_OPS = {"MoveClockwise", "RotateClockwise"}
    REQUIRED_EVENTS = {"seeWall", "seeRobot"}

    def __init__(self, world: World):
        self.world = world
        self.adapters: list[AggregationAdapter] = []
        self.hits: list[str] = []

    def make_adapter(self, robot_idx: int) -> "AggregationAdapter":
        adapter = AggregationAdapter(self, robot_idx)
        self.adapters.append(adapter)
        return adapter

    def begin_cycle(self) -> None:
        self.hits = raycast_all(self.world)
        for a in self.adapters:
            a.begin_cycle()

    @classmethod
    def check_machine(cls, cm) -> None:
        ops = {op.name for op in cm.external_ops} | {op.name for op in cm.defined_ops}
        if not cls.REQUIRED_OPS <= ops:
            raise AdapterError(
                f"machine {cm.name!r} lacks operations {sorted(cls.REQUIRED_OPS - ops)}"
            )
        if not cls.REQUIRED_EVENTS <= set(cm.events):
            raise AdapterError(
                f"machine {cm.name!r} lacks events"
                f" {sorted(cls.REQUIRED_EVENTS - set(cm.events))}"
            )


class AggregationAdapter(_RobotAdapter):
    bound_ops = frozenset({"MoveClockwise", "RotateClockwise"})

    def sample_events(self) -> set[str]:
        hit = self.family.hits[self.robot_idx]
        return {"seeRobot"} if hit == HIT_ROBOT else {"seeWall"}

    def invoke(self, name: str, args: list[Value]) -> None:
        if name == "MoveClockwise":
            angular, linear = args
            self._set_body(linear, angular)
        elif name == "RotateClockwise":
            self._set_body(0.0, args[0])
        else:
            raise AdapterError(f"aggregation adapter cannot bind {name!r}")
        return None


class TaxisFamily:
    """Range-and-bearing platform with beacon illumination and occlusion."""

    REQUIRED_OPS = {
        "CheckIlluminationStatus", "CalcAvoidanceHeading", "CalcCoherenceHeading",
        "Turn", "MoveForward",
    }
    REQUIRED_VARS = {"illuminated", "reached", "desiredTurningDegree", "avoidanceRadius"}
    REQUIRED_EVENTS = {"robotDetected"}

    def __init__(
        self,
        world: World,
        coherence_range_cm: float = 100.0,
        forward_speed_cmps: float = 6.4,
        turn_speed_radps: float = 2.0,
        avoidance_radius_scale: float = 1.0,
    ):
        if world.beacon is None:
            raise AdapterError("taxis platform needs a beacon")
        self.world = world
        self.coherence_range_cm = coherence_range_cm
        self.forward_speed_cmps = forward_speed_cmps
        self.turn_speed_radps = turn_speed_radps
        self.avoidance_radius_scale = avoidance_radius_scale
        self.adapters: list[TaxisAdapter] = []
        self.dist: np.ndarray | None = None
        self.illum: list[bool] = []

    def make_adapter(self, robot_idx: int) -> "TaxisAdapter":
        adapter = TaxisAdapter(self, robot_idx)
        self.adapters.append(adapter)
        return adapter

    def begin_cycle(self) -> None:
        w = self.world
        dx = w.x[:, None] - w.x[None, :]
        dy = w.y[:, None] - w.y[None, :]
        self.dist = np.hypot(dx, dy)
        self.illum = illumination_all(w)
        for a in self.adapters:
            a.begin_cycle()

    @classmethod
    def check_machine(cls, cm) -> None:
        ops = {op.name for op in cm.external_ops} | {op.name for op in cm.defined_ops}
        if not cls.REQUIRED_OPS <= ops:
            raise AdapterError(
                f"machine {cm.name!r} lacks operations {sorted(cls.REQUIRED_OPS - ops)}"
            )
        var_names = {v.name for v in cm.vars}
        if not cls.REQUIRED_VARS <= var_names:
            raise AdapterError(
                f"machine {cm.name!r} lacks variables"
                f" {sorted(cls.REQUIRED_VARS - var_names)}"
            )
        if not cls.REQUIRED_EVENTS <= set(cm.events):
            raise AdapterError(f"machine {cm.name!r} lacks event 'robotDetected'")


class TaxisAdapter(_RobotAdapter):
    bound_ops = frozenset(
        {
            "CheckIlluminationStatus", "CalcAvoidanceHeading", "CalcCoherenceHeading",
            "Turn", "MoveForward",
        }
    )

    def __init__(self, family: TaxisFamily, robot_idx: int):
        super().__init__(family, robot_idx)
        self.turn_accumulated = 0.0

    def _avoidance_radius_cm(self) -> float:
        # the model stores the radius in meters (0.1 or 0.2)
        radius_m = float(self.ctx.get_var("avoidanceRadius"))
        return radius_m * 100.0 * self.family.avoidance_radius_scale

    def _neighbor_indices(self, radius_cm: float) -> list[int]:
        d = self.family.dist[self.robot_idx]
        return [
            j
            for j in range(self.world.n_robots)
            if j != self.robot_idx and d[j] <= radius_cm
        ]

    def sample_events(self) -> set[str]:
        if self._neighbor_indices(self._avoidance_radius_cm()):
            return {"robotDetected"}
        return set()

    def _bearing_to_mean(self, indices: list[int]) -> float:
        w = self.world
        i = self.robot_idx
        mx = float(np.mean(w.x[indices]))
        my = float(np.mean(w.y[indices]))
        return normalize_angle(
            math.atan2(my - float(w.y[i]), mx - float(w.x[i])) - float(w.theta[i])
        )

    def invoke(self, name: str, args: list[Value]) -> dict[str, Value] | None:
        if name == "CheckIlluminationStatus":
            return {"illuminated": self.family.illum[self.robot_idx]}
        if name == "CalcAvoidanceHeading":
            indices = self._neighbor_indices(self._avoidance_radius_cm())
            self.turn_accumulated = 0.0
            self._set_body(0.0, 0.0)
            if not indices:  # neighbors vanished: nothing to avoid
                return {"desiredTurningDegree": 0.0, "reached": True}
            away = normalize_angle(self._bearing_to_mean(indices) + math.pi)
            return {"desiredTurningDegree": away}
        if name == "CalcCoherenceHeading":
            indices = self._neighbor_indices(self.family.coherence_range_cm)
            self.turn_accumulated = 0.0
            self._set_body(0.0, 0.0)
            if not indices:  # alone: keep heading, skip the turn
                return {"desiredTurningDegree": 0.0, "reached": True}
            return {"desiredTurningDegree": self._bearing_to_mean(indices)}
        if name == "Turn":
            return self._turn(float(args[0]))
        if name == "MoveForward":
            speed = self.family.forward_speed_cmps
            self.pending_wheels = (speed, speed)
            return None
        raise AdapterError(f"taxis adapter cannot bind {name!r}")

    def _turn(self, desired: float) -> dict[str, Value] | None:
        target = abs(desired)
        if self.turn_accumulated >= target:
            self._set_body(0.0, 0.0)
            return {"reached": True}
        # final cycle rotates only the remaining angle, so small corrections
        # do not overshoot by a whole cycle-step
        remaining = target - self.turn_accumulated
        omega = min(self.family.turn_speed_radps, remaining / self.world.control_dt)
        self.turn_accumulated += omega * self.world.control_dt
        self._set_body(0.0, omega if desired > 0 else -omega)
        if self.turn_accumulated >= target - 1e-12:
            self.turn_accumulated = max(self.turn_accumulated, target)
            return {"reached": True}
        return None
