"""
Kinematic bicycle model of the car-like vehicles and their controllers.

The pose of a vehicle is the pose of its rear axle center.
"""
import bisect
import collections
import math

import numpy as np

from .errors import GeometryError, ParameterError, StateError
from .geometry import OrientedRect, Pose2D

__all__ = ['VehicleState', 'ControlCommand', 'PursuitResult', 'Path', 'footprint', 'front_point',
           'step', 'pure_pursuit', 'stop_controller', 'signed_stop_distance', 'fillet_path']

VehicleState = collections.namedtuple('VehicleState', ['pose', 'speed', 'steer'])
ControlCommand = collections.namedtuple('ControlCommand', ['target_speed', 'steer'])
PursuitResult = collections.namedtuple('PursuitResult', ['steer', 'complete', 'progress'])


def footprint(state, params):
    """
    Footprint rectangle of a vehicle.

    :param state: VehicleState
    :param params: VehicleParams
    :return: OrientedRect
    """
    pose = state.pose
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    center = Pose2D(pose.x + params.rear_axle_offset * c, pose.y + params.rear_axle_offset * s, pose.theta)
    return OrientedRect(center, params.length, params.width)


def front_point(state, params):
    """Center of the front bumper."""
    reach = params.rear_axle_offset + params.length / 2.0
    return np.array([state.pose.x + reach * math.cos(state.pose.theta),
                     state.pose.y + reach * math.sin(state.pose.theta)])


def _slew(speed, target, accel, decel, dt):
    """
    Speed after dt when slewing toward target at bounded rates, and the
    exact distance covered meanwhile.
    """
    if target >= speed:
        rate = accel
        t_reach = (target - speed) / rate
    else:
        rate = -decel
        t_reach = (speed - target) / decel
    if t_reach >= dt:
        new_speed = speed + rate * dt
        return new_speed, 0.5 * (speed + new_speed) * dt
    return target, 0.5 * (speed + target) * t_reach + target * (dt - t_reach)


def step(state, params, cmd, dt):
    """
    Advances the vehicle by dt. Steering is applied directly within the
    steering limit, speed slews toward the target within the acceleration
    limits, and the pose follows the exact arc of constant curvature.

    :param state: VehicleState
    :param params: VehicleParams
    :param cmd: ControlCommand
    :param dt: float > 0
    :return: VehicleState
    """
    if not dt > 0:
        raise ParameterError('dt must be positive, got {}'.format(dt))
    values = (state.pose.x, state.pose.y, state.pose.theta, state.speed, state.steer, cmd.target_speed, cmd.steer)
    if not all(math.isfinite(v) for v in values):
        raise StateError('non-finite vehicle state or command: {}'.format(values))

    steer = min(max(cmd.steer, -params.max_steer), params.max_steer)
    target = min(max(cmd.target_speed, 0.0), params.max_speed)
    speed, distance = _slew(state.speed, target, params.max_accel, params.max_decel, dt)
    speed = min(max(speed, 0.0), params.max_speed)

    pose = state.pose
    dtheta = distance * math.tan(steer) / params.wheelbase
    # chord of the arc, exact for constant curvature and stable as it goes to zero
    chord = distance * float(np.sinc(dtheta / (2.0 * math.pi)))
    heading = pose.theta + 0.5 * dtheta
    new_pose = Pose2D(pose.x + chord * math.cos(heading), pose.y + chord * math.sin(heading), pose.theta + dtheta)
    return VehicleState(new_pose, speed, steer)


class Path:
    """
    A polyline with arc-length parametrisation.
    """

    def __init__(self, points):
        """
        :param points: array-like of shape (n, 2), n >= 2, consecutive points distinct
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise GeometryError('a path needs at least two 2D points')
        seg = np.diff(pts, axis=0)
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        if (lengths <= 0).any():
            raise GeometryError('a path may not repeat consecutive points')
        self._points = pts
        self._seg = seg
        self._seg_len = lengths
        self._cum = np.concatenate([[0.0], np.cumsum(lengths)])

    def points(self):
        return self._points

    def length(self):
        return float(self._cum[-1])

    def start_pose(self):
        """Pose at the path start heading along the first segment."""
        return Pose2D(self._points[0, 0], self._points[0, 1], math.atan2(self._seg[0, 1], self._seg[0, 0]))

    def point_at(self, s):
        """
        Point at arc length s. Beyond the ends the first or last segment is
        extended along its direction.
        """
        k = min(max(bisect.bisect_right(self._cum, s) - 1, 0), len(self._seg) - 1)
        t = (s - self._cum[k]) / self._seg_len[k]
        return self._points[k] + t * self._seg[k]

    def project(self, point, hint=None, window=None):
        """
        Arc length of the closest path point.

        :param point: (x, y)
        :param hint: float or None, previous progress to search around
        :param window: (behind, ahead) extent of the search around hint
        :return: float
        """
        p = np.asarray(point, dtype=float)
        first, last = 0, len(self._seg) - 1
        if hint is not None and window is not None:
            first = max(bisect.bisect_right(self._cum, hint - window[0]) - 1, 0)
            last = min(bisect.bisect_right(self._cum, hint + window[1]) - 1, len(self._seg) - 1)
        a = self._points[first:last + 1]
        seg = self._seg[first:last + 1]
        t = np.clip(np.einsum('ij,ij->i', p - a, seg) / self._seg_len[first:last + 1] ** 2, 0.0, 1.0)
        closest = a + t[:, None] * seg
        d = np.hypot(closest[:, 0] - p[0], closest[:, 1] - p[1])
        k = int(np.argmin(d))
        s = float(self._cum[first + k] + t[k] * self._seg_len[first + k])
        if first + k == len(self._seg) - 1 and t[k] >= 1.0:
            # past the end: measure along the extended last segment
            s = float(self._cum[-1] + (p - self._points[-1]) @ self._seg[-1] / self._seg_len[-1])
        return s


def pure_pursuit(state, params, path, lookahead, progress=None):
    """
    Pure-pursuit steering toward the path point one lookahead ahead of the
    vehicle's projection onto the path.

    Passing the previous progress makes the projection search a window
    around it, so self-overlapping paths are followed in order.

    :param state: VehicleState
    :param params: VehicleParams
    :param path: Path
    :param lookahead: float > 0
    :param progress: float or None
    :return: PursuitResult(steer, complete, progress)
    """
    if not lookahead > 0:
        raise ParameterError('lookahead must be positive, got {}'.format(lookahead))
    pose = state.pose
    window = (lookahead, 2.0 * lookahead + 1.0) if progress is not None else None
    s = path.project((pose.x, pose.y), hint=progress, window=window)
    if progress is not None:
        s = max(s, progress)
    if s >= path.length():
        return PursuitResult(0.0, True, s)
    target = path.point_at(s + lookahead)
    dx, dy = target[0] - pose.x, target[1] - pose.y
    distance = math.hypot(dx, dy)
    if distance == 0:
        return PursuitResult(0.0, False, s)
    alpha = math.atan2(dy, dx) - pose.theta
    steer = math.atan(2.0 * params.wheelbase * math.sin(alpha) / distance)
    steer = min(max(steer, -params.max_steer), params.max_steer)
    return PursuitResult(steer, False, s)


def stop_controller(state, params, stop_point_distance, cruise, margin=0.05, brake_fraction=1.0):
    """
    Target speed that brings the vehicle to rest ``margin`` before a stop
    point, braking at ``brake_fraction`` of the maximum deceleration.

    :param stop_point_distance: distance from the rear axle to the stop point along the path
    :param cruise: speed commanded when no stop is needed
    :param brake_fraction: float in (0, 1]
    :return: float target speed
    """
    if not 0 < brake_fraction <= 1:
        raise ParameterError('brake_fraction must lie in (0, 1], got {}'.format(brake_fraction))
    room = stop_point_distance - margin
    if room <= 1e-4:
        return 0.0
    return min(cruise, math.sqrt(2.0 * brake_fraction * params.max_decel * room))


def signed_stop_distance(state, params, stop_line):
    """
    Signed distance from the rear axle to a stop line, negative before it.
    Traffic crosses the line along the left normal of its start -> end
    direction.

    :param stop_line: StopLine or pair of points
    :return: float
    """
    (x0, y0), (x1, y1) = stop_line
    ex, ey = x1 - x0, y1 - y0
    norm = math.hypot(ex, ey)
    if norm == 0:
        raise GeometryError('stop line has zero length')
    nx, ny = -ey / norm, ex / norm
    return (state.pose.x - x0) * nx + (state.pose.y - y0) * ny


def fillet_path(corners, radius, closed=True, loops=1, spacing=0.05):
    """
    Rounds the corners of a polyline with circular arcs.

    :param corners: (n, 2) corner points
    :param radius: arc radius; must fit within the adjoining segments
    :param closed: treat the polyline as a closed loop
    :param loops: number of times a closed loop is repeated
    :param spacing: approximate distance between arc samples
    :return: ndarray (m, 2) of path points
    """
    pts = np.asarray(corners, dtype=float)
    n = len(pts)
    indices = range(n) if closed else range(1, n - 1)
    arcs = {}
    for k in indices:
        prev, cur, nxt = pts[k - 1], pts[k], pts[(k + 1) % n]
        a = (prev - cur) / np.linalg.norm(prev - cur)
        b = (nxt - cur) / np.linalg.norm(nxt - cur)
        half = 0.5 * math.acos(float(np.clip(a @ b, -1.0, 1.0)))
        if half >= math.pi / 2 - 1e-9:
            continue
        tangent = radius / math.tan(half)
        if tangent > 0.5 * min(np.linalg.norm(prev - cur), np.linalg.norm(nxt - cur)) + 1e-9:
            raise GeometryError('fillet radius {} does not fit at corner {}'.format(radius, k))
        p_in, p_out = cur + a * tangent, cur + b * tangent
        bis = (a + b) / np.linalg.norm(a + b)
        center = cur + bis * radius / math.sin(half)
        start = math.atan2(p_in[1] - center[1], p_in[0] - center[0])
        end = math.atan2(p_out[1] - center[1], p_out[0] - center[0])
        sweep = math.remainder(end - start, 2.0 * math.pi)
        count = max(int(math.ceil(abs(sweep) * radius / spacing)), 2)
        ang = start + sweep * np.linspace(0.0, 1.0, count + 1)
        arcs[k] = center + radius * np.column_stack([np.cos(ang), np.sin(ang)])

    loop = []
    for k in range(n):
        if k in arcs:
            loop.extend(arcs[k])
        else:
            loop.append(pts[k])
    if closed:
        loop = loop * loops + [loop[0]]
    out = [loop[0]]
    for p in loop[1:]:
        if np.hypot(*(np.asarray(p) - out[-1])) > 1e-9:
            out.append(np.asarray(p))
    return np.array(out)
