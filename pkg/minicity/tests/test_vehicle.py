import math

import numpy as np
import numpy.testing as npt
import pytest

import minicity
from minicity.tests.tools import make_state

PARAMS = minicity.make_vehicle_params()


def test_steering_limit_from_turning_radius():
    geometry = minicity.Parameters(0.33, 1.47)
    npt.assert_almost_equal(geometry.max_steer(), math.atan(0.33 / 1.47))
    npt.assert_almost_equal(minicity.Parameters.radius_for(0.33, geometry.max_steer()), 1.47)
    assert minicity.Parameters.radius_for(0.33, 0.0) == math.inf
    npt.assert_almost_equal(PARAMS.max_steer, geometry.max_steer())


def test_make_vehicle_params_validates():
    with pytest.raises(minicity.ParameterError):
        minicity.make_vehicle_params(max_decel=0.0)
    with pytest.raises(minicity.ParameterError):
        minicity.make_vehicle_params(colour='red')
    params = minicity.make_vehicle_params(turning_radius=1.0)
    npt.assert_almost_equal(params.max_steer, math.atan(0.33))


def test_footprint_and_front_point():
    state = make_state(1.0, 2.0, math.pi / 2)
    rect = minicity.footprint(state, PARAMS)
    npt.assert_allclose([rect.center.x, rect.center.y], [1.0, 2.165])
    assert (rect.length, rect.width) == (0.51, 0.30)
    npt.assert_allclose(minicity.front_point(state, PARAMS), [1.0, 2.42])


def test_step_accelerates_within_limit():
    state = minicity.step(make_state(), PARAMS, minicity.ControlCommand(1.0, 0.0), 0.5)
    npt.assert_almost_equal(state.speed, 0.5)
    npt.assert_almost_equal(state.pose.x, 0.125)
    npt.assert_almost_equal(state.pose.y, 0.0)


def test_step_reaches_target_inside_the_tick():
    state = minicity.step(make_state(speed=0.8), PARAMS, minicity.ControlCommand(1.0, 0.0), 0.5)
    npt.assert_almost_equal(state.speed, 1.0)
    npt.assert_almost_equal(state.pose.x, 0.48)


def test_step_follows_circle_and_clamps_steer():
    steer = 0.1
    radius = PARAMS.wheelbase / math.tan(steer)
    state = make_state(speed=1.0)
    for _ in range(100):
        state = minicity.step(state, PARAMS, minicity.ControlCommand(1.0, steer), 0.05)
    npt.assert_almost_equal(math.hypot(state.pose.x, state.pose.y - radius), radius)

    clamped = minicity.step(make_state(), PARAMS, minicity.ControlCommand(0.0, 1.0), 0.05)
    npt.assert_almost_equal(clamped.steer, PARAMS.max_steer)


def test_step_never_reverses_or_exceeds_max_speed():
    state = minicity.step(make_state(speed=0.1), PARAMS, minicity.ControlCommand(-1.0, 0.0), 1.0)
    assert state.speed == 0.0
    state = make_state(speed=1.9)
    for _ in range(20):
        state = minicity.step(state, PARAMS, minicity.ControlCommand(10.0, 0.0), 0.1)
    assert state.speed == PARAMS.max_speed


def test_step_rejects_bad_input():
    with pytest.raises(minicity.ParameterError):
        minicity.step(make_state(), PARAMS, minicity.ControlCommand(1.0, 0.0), 0.0)
    with pytest.raises(minicity.StateError):
        minicity.step(make_state(), PARAMS, minicity.ControlCommand(float('nan'), 0.0), 0.1)


def test_stop_controller_values():
    assert minicity.stop_controller(make_state(), PARAMS, 0.05, 1.0, margin=0.05) == 0.0
    assert minicity.stop_controller(make_state(), PARAMS, 5.0, 1.0) == 1.0
    npt.assert_almost_equal(minicity.stop_controller(make_state(), PARAMS, 0.15, 1.0, margin=0.05),
                            math.sqrt(2.0 * PARAMS.max_decel * 0.1))
    # exactly at the braking distance the target is the current speed
    boundary = 0.05 + 0.8 ** 2 / (2.0 * PARAMS.max_decel)
    npt.assert_almost_equal(minicity.stop_controller(make_state(speed=0.8), PARAMS, boundary, 2.0), 0.8)
    npt.assert_almost_equal(minicity.stop_controller(make_state(), PARAMS, 0.15, 1.0, brake_fraction=0.8),
                            math.sqrt(0.24))
    for fraction in (0.0, 1.5):
        with pytest.raises(minicity.ParameterError):
            minicity.stop_controller(make_state(), PARAMS, 1.0, 1.0, brake_fraction=fraction)


@pytest.mark.parametrize('speed', np.linspace(0.2, 1.5, 10))
def test_stop_controller_stops_before_the_point(speed):
    margin = 0.1
    for extra in np.linspace(0.0, 2.0, 10):
        distance = margin + speed ** 2 / (2.0 * PARAMS.max_decel) + extra
        state = make_state(speed=speed)
        for _ in range(600):
            target = minicity.stop_controller(state, PARAMS, distance - state.pose.x, speed, margin,
                                              minicity.PLANNED_BRAKE_FRACTION)
            state = minicity.step(state, PARAMS, minicity.ControlCommand(target, 0.0), 0.05)
            if state.speed == 0.0:
                break
        assert state.speed == 0.0
        assert distance - margin - 0.005 < state.pose.x < distance


def test_signed_stop_distance():
    line = minicity.StopLine((2.6, 2.15), (3.0, 2.15))
    npt.assert_almost_equal(minicity.signed_stop_distance(make_state(2.8, 1.15, math.pi / 2), PARAMS, line), -1.0)
    npt.assert_almost_equal(minicity.signed_stop_distance(make_state(2.8, 2.65, math.pi / 2), PARAMS, line), 0.5)
    with pytest.raises(minicity.GeometryError):
        minicity.signed_stop_distance(make_state(), PARAMS, ((1.0, 1.0), (1.0, 1.0)))


def test_path_arc_length():
    path = minicity.Path([(0.0, 0.0), (3.0, 0.0), (3.0, 4.0)])
    assert path.length() == 7.0
    npt.assert_allclose(path.point_at(5.0), [3.0, 2.0])
    npt.assert_allclose(path.point_at(-1.0), [-1.0, 0.0])
    npt.assert_allclose(path.point_at(8.0), [3.0, 5.0])
    npt.assert_almost_equal(path.project((2.0, 0.3)), 2.0)
    npt.assert_almost_equal(path.project((3.0, 6.0)), 9.0)
    assert path.start_pose() == minicity.Pose2D(0.0, 0.0, 0.0)
    with pytest.raises(minicity.GeometryError):
        minicity.Path([(0.0, 0.0), (0.0, 0.0)])


def test_pure_pursuit_converges_to_the_line():
    path = minicity.Path([(0.0, 0.0), (5.0, 0.0)])
    state = make_state(0.0, 0.2, 0.0, speed=1.0)
    progress = None
    first = minicity.pure_pursuit(state, PARAMS, path, 0.5)
    assert first.steer < 0.0
    for _ in range(200):
        result = minicity.pure_pursuit(state, PARAMS, path, 0.5, progress)
        progress = result.progress
        if result.complete:
            break
        state = minicity.step(state, PARAMS, minicity.ControlCommand(1.0, result.steer), 0.05)
    assert result.complete
    assert abs(state.pose.y) < 0.05
    with pytest.raises(minicity.ParameterError):
        minicity.pure_pursuit(state, PARAMS, path, 0.0)


def test_fillet_path_rounds_square():
    corners = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]
    points = minicity.fillet_path(corners, 0.5)
    npt.assert_allclose(points[0], points[-1])
    assert points.min() >= -1e-9 and points.max() <= 2.0 + 1e-9
    length = minicity.Path(points).length()
    npt.assert_allclose(length, 8.0 - 4.0 + math.pi * 0.5, atol=0.01)
    twice = minicity.Path(minicity.fillet_path(corners, 0.5, loops=2)).length()
    npt.assert_allclose(twice, 2.0 * length)
    with pytest.raises(minicity.GeometryError):
        minicity.fillet_path(corners, 1.5)
