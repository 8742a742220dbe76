"""Differential-drive kinematics for an e-puck-like robot.

Units: cm, seconds, radians. Headings are kept in (-pi, pi].
"""

from __future__ import annotations

import logging
import math

log = logging.getLogger("smforge.sim")

EPUCK_MAX_SPEED_CMPS = 12.8
EPUCK_WHEEL_BASE_CM = 5.1
EPUCK_BODY_RADIUS_CM = 3.7

TAU = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Wrap into (-pi, pi]."""
    return math.pi - (math.pi - theta) % TAU


def wheel_to_body(
    vl_norm: float,
    vr_norm: float,
    max_speed: float = EPUCK_MAX_SPEED_CMPS,
    wheel_base: float = EPUCK_WHEEL_BASE_CM,
) -> tuple[float, float]:
    """Normalized wheel pair in [-1, 1] -> (linear cm/s, angular rad/s)."""
    if not (-1.0 <= vl_norm <= 1.0 and -1.0 <= vr_norm <= 1.0):
        raise ValueError("normalized wheel speeds must lie in [-1, 1]")
    if max_speed <= 0 or wheel_base <= 0:
        raise ValueError("max_speed and wheel_base must be positive")
    v = (vl_norm + vr_norm) / 2.0 * max_speed
    omega = (vr_norm - vl_norm) * max_speed / wheel_base
    return v, omega


def body_to_wheel(
    v: float,
    omega: float,
    max_speed: float = EPUCK_MAX_SPEED_CMPS,
    wheel_base: float = EPUCK_WHEEL_BASE_CM,
) -> tuple[float, float]:
    """(linear, angular) -> wheel speeds in cm/s, clamped to +-max_speed.

    Inverse of wheel_to_body whenever no clamping occurs.
    """
    vl = v - omega * wheel_base / 2.0
    vr = v + omega * wheel_base / 2.0
    if abs(vl) > max_speed or abs(vr) > max_speed:
        log.debug("wheel command (%.3f, %.3f) clamped to +-%.3f", vl, vr, max_speed)
        vl = min(max(vl, -max_speed), max_speed)
        vr = min(max(vr, -max_speed), max_speed)
    return vl, vr


def integrate_pose(
    x: float,
    y: float,
    theta: float,
    vl: float,
    vr: float,
    dt: float,
    wheel_base: float = EPUCK_WHEEL_BASE_CM,
) -> tuple[float, float, float]:
    """One explicit-Euler step of the unicycle model (wheels in cm/s)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = (vl + vr) / 2.0
    omega = (vr - vl) / wheel_base
    return (
        x + v * math.cos(theta) * dt,
        y + v * math.sin(theta) * dt,
        normalize_angle(theta + omega * dt),
    )
