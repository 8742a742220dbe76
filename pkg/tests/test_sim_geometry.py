import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smforge.sim.geometry import (
    HIT_ROBOT,
    HIT_WALL,
    illumination_all,
    is_illuminated,
    neighbors_within,
    raycast_all,
    raycast_line_of_sight,
)
from smforge.sim.world import World


def make_world(poses, beacon=None, arena=(500.0, 500.0)):
    w = World(arena[0], arena[1], len(poses), beacon=beacon)
    for i, (x, y, theta) in enumerate(poses):
        w.place(i, x, y, theta)
    return w


def test_raycast_hits_robot_on_axis():
    w = make_world([(100.0, 100.0, 0.0), (150.0, 100.0, 0.0)])
    assert raycast_line_of_sight(w, 0) == HIT_ROBOT


def test_raycast_alone_hits_wall():
    w = make_world([(100.0, 100.0, 0.5)])
    assert raycast_line_of_sight(w, 0) == HIT_WALL


def test_raycast_misses_offset_disc():
    # other robot center 10 cm off-axis, radius 3.7: the ray misses
    w = make_world([(100.0, 100.0, 0.0), (150.0, 110.0, 0.0)])
    assert raycast_line_of_sight(w, 0) == HIT_WALL
    # 3 cm off-axis: hit
    w2 = make_world([(100.0, 100.0, 0.0), (150.0, 103.0, 0.0)])
    assert raycast_line_of_sight(w2, 0) == HIT_ROBOT


def test_raycast_range_unlimited():
    w = make_world([(10.0, 10.0, 0.0), (490.0, 10.0, 0.0)])
    assert raycast_line_of_sight(w, 0) == HIT_ROBOT


def test_raycast_only_forward():
    # a robot directly behind is not seen
    w = make_world([(100.0, 100.0, 0.0), (50.0, 100.0, 0.0)])
    assert raycast_line_of_sight(w, 0) == HIT_WALL
    assert raycast_line_of_sight(w, 1) == HIT_ROBOT


def _brute_force_raycast(w, i):
    """Scalar reference: march the ray, first disc vs wall intersection."""
    ox, oy = float(w.x[i]), float(w.y[i])
    dx, dy = math.cos(float(w.theta[i])), math.sin(float(w.theta[i]))
    t_wall = math.inf
    if dx > 1e-12:
        t_wall = min(t_wall, (w.arena_w - ox) / dx)
    elif dx < -1e-12:
        t_wall = min(t_wall, -ox / dx)
    if dy > 1e-12:
        t_wall = min(t_wall, (w.arena_h - oy) / dy)
    elif dy < -1e-12:
        t_wall = min(t_wall, -oy / dy)
    t_robot = math.inf
    for j in range(w.n_robots):
        if j == i:
            continue
        mx, my = float(w.x[j]) - ox, float(w.y[j]) - oy
        b = dx * mx + dy * my
        disc = b * b - (mx * mx + my * my - w.body_radius**2)
        if disc < 0:
            continue
        s = math.sqrt(disc)
        for root in (b - s, b + s):
            if root > 1e-9:
                t_robot = min(t_robot, root)
                break
    return HIT_ROBOT if t_robot <= t_wall else HIT_WALL


def test_raycast_matches_brute_force():
    rng = np.random.default_rng(3)
    for trial in range(20):
        n = int(rng.integers(1, 14))
        w = make_world(
            [
                (float(x), float(y), float(t))
                for x, y, t in zip(
                    rng.uniform(20, 480, n),
                    rng.uniform(20, 480, n),
                    rng.uniform(-3, 3, n),
                )
            ]
        )
        assert raycast_all(w) == [_brute_force_raycast(w, i) for i in range(n)]


def test_neighbors_within_basic():
    w = make_world([(100.0, 100.0, 0.0), (115.0, 100.0, 0.0)])
    assert neighbors_within(w, 0, 20.0) == [(15.0, 0.0)]
    assert neighbors_within(w, 0, 10.0) == []


def test_neighbors_collinear_selection():
    w = make_world(
        [(100.0, 100.0, 0.0), (110.0, 100.0, 0.0), (130.0, 100.0, 0.0)]
    )
    result = neighbors_within(w, 0, 20.0)
    assert len(result) == 1
    assert result[0][0] == 10.0


def test_neighbors_sorted_and_bearing():
    w = make_world(
        [(100.0, 100.0, math.pi / 2), (100.0, 120.0, 0.0), (90.0, 100.0, 0.0)]
    )
    result = neighbors_within(w, 0, 50.0)
    assert [round(r, 6) for r, _ in result] == [10.0, 20.0]
    # robot 2 is to the left (west); heading is north: bearing +pi/2
    assert result[0][1] == pytest.approx(math.pi / 2)
    # robot 1 is straight ahead (north): bearing 0
    assert result[1][1] == pytest.approx(0.0)


def test_neighbors_requires_positive_radius():
    w = make_world([(100.0, 100.0, 0.0)])
    with pytest.raises(ValueError):
        neighbors_within(w, 0, 0.0)


def test_illumination_direct_occlusion():
    beacon = (200.0, 100.0)
    w = make_world(
        [(100.0, 100.0, 0.0), (150.0, 100.0, 0.0)], beacon=beacon
    )
    assert is_illuminated(w, 0) is False
    assert is_illuminated(w, 1) is True


def test_illumination_clear_offset():
    beacon = (200.0, 100.0)
    w = make_world(
        [(100.0, 100.0, 0.0), (150.0, 110.0, 0.0)], beacon=beacon
    )
    assert is_illuminated(w, 0) is True


def test_illumination_no_blocker():
    w = make_world([(100.0, 100.0, 0.0)], beacon=(200.0, 100.0))
    assert is_illuminated(w, 0) is True


def test_illumination_requires_beacon():
    w = make_world([(100.0, 100.0, 0.0)])
    with pytest.raises(ValueError):
        is_illuminated(w, 0)


def test_illumination_all_matches_single():
    rng = np.random.default_rng(5)
    poses = [
        (float(x), float(y), 0.0)
        for x, y in zip(rng.uniform(20, 480, 15), rng.uniform(20, 480, 15))
    ]
    w = make_world(poses, beacon=(499.0, 250.0))
    flags = illumination_all(w)
    assert flags == [is_illuminated(w, i) for i in range(15)]


@st.composite
def _world_and_rigid_motion(draw):
    from hypothesis import assume

    n = draw(st.integers(min_value=2, max_value=6))
    coords = st.floats(min_value=-80.0, max_value=80.0)
    poses = [
        (draw(coords), draw(coords), draw(st.floats(min_value=-3.1, max_value=3.1)))
        for _ in range(n)
    ]
    # keep robots apart so ray tangencies do not flip under fp rounding
    for i in range(n):
        for j in range(i + 1, n):
            dx = poses[i][0] - poses[j][0]
            dy = poses[i][1] - poses[j][1]
            assume(math.hypot(dx, dy) >= 9.0)
    angle = draw(st.floats(min_value=-3.0, max_value=3.0))
    shift = (draw(st.floats(min_value=-40, max_value=40)),
             draw(st.floats(min_value=-40, max_value=40)))
    return poses, angle, shift


@given(_world_and_rigid_motion())
@settings(max_examples=60, deadline=None)
def test_sensing_invariant_under_rigid_motion(data):
    """neighborsWithin is invariant under rotating+translating the world."""
    poses, angle, shift = data
    big = 4000.0
    center = big / 2

    def build(transform):
        w = World(big, big, len(poses))
        for i, (x, y, t) in enumerate(poses):
            if transform:
                c, s = math.cos(angle), math.sin(angle)
                tx = c * x - s * y + shift[0]
                ty = s * x + c * y + shift[1]
                w.place(i, center + tx, center + ty, t + angle)
            else:
                w.place(i, center + x, center + y, t)
        return w

    w0 = build(False)
    w1 = build(True)
    for i in range(len(poses)):
        n0 = neighbors_within(w0, i, 60.0)
        n1 = neighbors_within(w1, i, 60.0)
        assert len(n0) == len(n1)
        for (r0, b0), (r1, b1) in zip(n0, n1):
            assert math.isclose(r0, r1, abs_tol=1e-6)
            assert math.isclose(
                math.remainder(b0 - b1, math.tau), 0.0, abs_tol=1e-6
            )


@given(_world_and_rigid_motion())
@settings(max_examples=40, deadline=None)
def test_raycast_invariant_under_rigid_motion(data):
    """Robot-vs-robot ray hits survive rigid motion (walls stay far away)."""
    poses, angle, shift = data
    big = 4000.0
    center = big / 2

    def build(transform):
        w = World(big, big, len(poses))
        for i, (x, y, t) in enumerate(poses):
            if transform:
                c, s = math.cos(angle), math.sin(angle)
                tx = c * x - s * y + shift[0]
                ty = s * x + c * y + shift[1]
                w.place(i, center + tx, center + ty, t + angle)
            else:
                w.place(i, center + x, center + y, t)
        return w

    assert raycast_all(build(False)) == raycast_all(build(True))
