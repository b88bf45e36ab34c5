"""
Vehicle-to-infrastructure messaging: message types and their wire codec,
a lossy and delayed channel, the intersection model, the infrastructure
warning logic and the communicating vehicle's response to warnings.
"""
import collections
import heapq
import logging
import math
import struct

import numpy as np

from .city import intersection_polygon
from .errors import ConfigError, GeometryError, ParameterError
from .geometry import (Polygon, Pose2D, distance_to_polygon, make_polygon, point_in_polygon, polygon_centroid,
                       polygon_intersects_rect, scale_polygon, segments_intersect, translate_polygon)
from .vehicle import VehicleState, footprint, signed_stop_distance, stop_controller

__all__ = ['VEHICLE_STATE', 'WARNING', 'DROPPED', 'VehicleStatePayload', 'WarningPayload', 'V2IMessage',
           'Delivery', 'Decision', 'CommReport', 'ControlIntent', 'VehicleContext', 'vehicle_state_message',
           'warning_message', 'encode_message', 'decode_message', 'ChannelModel', 'channel_send',
           'IntersectionModel', 'approaching', 'decide_warning', 'InfraState', 'infra_decide',
           'WarningLatch', 'comm_vehicle_handle', 'presence_trigger', 'PLANNED_BRAKE_FRACTION']

logger = logging.getLogger(__name__)

VEHICLE_STATE = 'VEHICLE_STATE'
WARNING = 'WARNING'

# Share of the maximum deceleration a warned vehicle plans its stop with.
PLANNED_BRAKE_FRACTION = 0.8

VehicleStatePayload = collections.namedtuple('VehicleStatePayload', ['pose', 'speed'])
WarningPayload = collections.namedtuple('WarningPayload', ['active', 'cause_track_id'])
V2IMessage = collections.namedtuple('V2IMessage', ['kind', 'sender', 'timestamp', 'payload'])
Delivery = collections.namedtuple('Delivery', ['at'])
Decision = collections.namedtuple('Decision', ['t', 'active', 'cause_track_id'])
CommReport = collections.namedtuple('CommReport', ['pose', 'speed', 'timestamp'])
ControlIntent = collections.namedtuple('ControlIntent', ['mode', 'target_speed'])
VehicleContext = collections.namedtuple('VehicleContext', ['state', 'params', 'stop_line', 'cruise_speed', 'margin'])
VehicleContext.__doc__ = """What a communicating vehicle knows when handling a warning.

state is the localized VehicleState; stop_line may be None only for vehicles
that never receive warnings."""


class _Dropped:
    def __repr__(self):
        return 'DROPPED'


DROPPED = _Dropped()


def vehicle_state_message(sender, timestamp, pose, speed):
    """State report of a communicating vehicle; pose is its footprint center."""
    return V2IMessage(VEHICLE_STATE, int(sender), float(timestamp), VehicleStatePayload(pose, float(speed)))


def warning_message(sender, timestamp, active, cause_track_id=None):
    return V2IMessage(WARNING, int(sender), float(timestamp), WarningPayload(bool(active), cause_track_id))


# length:u16 version:u8 kind:u8 sender:u16 t:f64, then the payload
WIRE_VERSION = 1
_HEADER = struct.Struct('<HBBHd')
_STATE = struct.Struct('<dddd')
_WARNING = struct.Struct('<Bi')
_KIND_CODE = {VEHICLE_STATE: 1, WARNING: 2}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def encode_message(msg):
    """
    Serializes a message into its length-prefixed little-endian record.

    :return: bytes
    """
    if msg.kind == VEHICLE_STATE:
        p = msg.payload
        body = _STATE.pack(p.pose.x, p.pose.y, p.pose.theta, p.speed)
    elif msg.kind == WARNING:
        cause = -1 if msg.payload.cause_track_id is None else int(msg.payload.cause_track_id)
        body = _WARNING.pack(int(msg.payload.active), cause)
    else:
        raise ParameterError('unknown message kind {!r}'.format(msg.kind))
    length = _HEADER.size - 2 + len(body)
    return _HEADER.pack(length, WIRE_VERSION, _KIND_CODE[msg.kind], msg.sender, msg.timestamp) + body


def decode_message(data):
    """Parses a record produced by encode_message."""
    if len(data) < _HEADER.size:
        raise ParameterError('record shorter than its header')
    length, version, code, sender, timestamp = _HEADER.unpack_from(data)
    if version != WIRE_VERSION:
        raise ParameterError('unsupported wire version {}'.format(version))
    if length + 2 != len(data):
        raise ParameterError('record length {} does not match {} bytes'.format(length, len(data)))
    kind = _CODE_KIND.get(code)
    if kind == VEHICLE_STATE:
        x, y, theta, speed = _STATE.unpack_from(data, _HEADER.size)
        return vehicle_state_message(sender, timestamp, Pose2D(x, y, theta), speed)
    if kind == WARNING:
        active, cause = _WARNING.unpack_from(data, _HEADER.size)
        return warning_message(sender, timestamp, bool(active), None if cause < 0 else cause)
    raise ParameterError('unknown message kind code {}'.format(code))


class ChannelModel:
    """
    A one-way link. Each message is dropped with drop_prob or delivered
    after base_latency plus Gaussian jitter, clamped at zero. Deliveries
    between one sender and one receiver never overtake each other.
    """

    def __init__(self, params, rng):
        """
        :param params: ChannelParams
        :param rng: numpy Generator, consumed twice per message
        """
        if params.base_latency < 0 or params.jitter_sigma < 0 or not 0 <= params.drop_prob <= 1:
            raise ParameterError('bad channel parameters {}'.format(params))
        self._params = params
        self._rng = rng
        self._queues = collections.defaultdict(list)
        self._last = {}
        self._seq = 0
        self._sent = 0
        self._dropped = 0

    def params(self):
        return self._params

    def counts(self):
        return {'sent': self._sent, 'dropped': self._dropped}

    def send(self, msg, now, receiver=0):
        """
        :return: Delivery with the arrival time, or DROPPED
        """
        if not math.isfinite(now):
            raise ParameterError('send time must be finite')
        drop = self._rng.uniform() < self._params.drop_prob
        jitter = self._rng.normal(0.0, 1.0) * self._params.jitter_sigma
        self._sent += 1
        if drop:
            self._dropped += 1
            return DROPPED
        pair = (msg.sender, receiver)
        at = max(now + max(0.0, self._params.base_latency + jitter), self._last.get(pair, -math.inf))
        self._last[pair] = at
        heapq.heappush(self._queues[receiver], (at, self._seq, msg))
        self._seq += 1
        return Delivery(at)

    def receive(self, now, receiver=0):
        """Messages for ``receiver`` that have arrived by ``now``, in arrival order."""
        queue = self._queues[receiver]
        out = []
        while queue and queue[0][0] <= now + 1e-9:
            out.append(heapq.heappop(queue)[2])
        return out

    def pending(self, receiver=0):
        return len(self._queues[receiver])


def channel_send(ch, msg, now):
    return ch.send(msg, now)


class IntersectionModel:
    """
    The region a smart intersection treats as "inside", with its stop lines.

    The base polygon is shifted by center_offset and then scaled about its
    own centroid. Stop lines must lie outside the resulting polygon.
    """

    def __init__(self, polygon, stop_lines, scale=1.0, center_offset=(0.0, 0.0), approach_zone_depth=1.0,
                 speed_threshold=0.05, match_radius=0.3, heartbeat=0.1):
        if not isinstance(polygon, Polygon):
            polygon = make_polygon(polygon)
        if not scale > 0:
            raise ParameterError('scale must be positive, got {}'.format(scale))
        if approach_zone_depth < 0 or speed_threshold < 0 or match_radius < 0 or not heartbeat > 0:
            raise ParameterError('zone depth, speed threshold and match radius must be non-negative, heartbeat positive')
        self._base = polygon
        self._scale = float(scale)
        self._offset = (float(center_offset[0]), float(center_offset[1]))
        self._polygon = scale_polygon(translate_polygon(polygon, self._offset), self._scale)
        self._centroid = polygon_centroid(self._polygon)
        self._stop_lines = {k: (tuple(v[0]), tuple(v[1])) for k, v in stop_lines.items()}
        self._depth = float(approach_zone_depth)
        self._speed_threshold = float(speed_threshold)
        self._match_radius = float(match_radius)
        self._heartbeat = float(heartbeat)
        self._zone = None
        for approach, line in self._stop_lines.items():
            if line[0] == line[1]:
                raise GeometryError('stop line {} has zero length'.format(approach))
            if self._crosses(line):
                raise ConfigError('stop line {} lies inside the scaled intersection polygon'.format(approach))

    @classmethod
    def from_spec(cls, spec, **kwargs):
        """Model of a layout IntersectionSpec with a square base polygon."""
        return cls(intersection_polygon(spec), spec.stop_lines, **kwargs)

    def _crosses(self, line):
        if point_in_polygon(line[0], self._polygon) or point_in_polygon(line[1], self._polygon):
            return True
        verts = self._polygon.vertices
        return any(segments_intersect(line[0], line[1], verts[i], verts[(i + 1) % len(verts)])
                   for i in range(len(verts)))

    def _kwargs(self):
        return dict(scale=self._scale, center_offset=self._offset, approach_zone_depth=self._depth,
                    speed_threshold=self._speed_threshold, match_radius=self._match_radius,
                    heartbeat=self._heartbeat)

    def with_scale(self, scale):
        kwargs = self._kwargs()
        kwargs['scale'] = scale
        return IntersectionModel(self._base, self._stop_lines, **kwargs)

    def with_offset(self, center_offset):
        kwargs = self._kwargs()
        kwargs['center_offset'] = center_offset
        return IntersectionModel(self._base, self._stop_lines, **kwargs)

    def base_polygon(self):
        return self._base

    def polygon(self):
        """The shifted and scaled polygon."""
        return self._polygon

    def centroid(self):
        return self._centroid

    def scale(self):
        return self._scale

    def center_offset(self):
        return self._offset

    def stop_lines(self):
        return dict(self._stop_lines)

    def stop_line(self, approach):
        try:
            return self._stop_lines[approach]
        except KeyError:
            raise ConfigError('approach {} has no stop line'.format(approach))

    def approach_zone_depth(self):
        return self._depth

    def speed_threshold(self):
        return self._speed_threshold

    def match_radius(self):
        return self._match_radius

    def heartbeat(self):
        return self._heartbeat

    def in_zone(self, point):
        """Inside the polygon or within the zone depth of it."""
        return point_in_polygon(point, self._polygon) or distance_to_polygon(point, self._polygon) <= self._depth

    def zone(self, spacing=0.05):
        """
        Outline of the polygon dilated by the zone depth, with round
        corners. Only defined for convex polygons.

        :return: ndarray (n, 2)
        """
        if self._zone is None:
            verts = np.asarray(self._polygon.vertices)
            n = len(verts)
            edges = np.roll(verts, -1, axis=0) - verts
            cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
            if (cross < -1e-12).any():
                raise GeometryError('the approach zone outline needs a convex polygon')
            normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / np.hypot(edges[:, 0], edges[:, 1])[:, None]
            outline = []
            for k in range(n):
                before, after = normals[k - 1], normals[k]
                a0 = math.atan2(before[1], before[0])
                sweep = math.remainder(math.atan2(after[1], after[0]) - a0, 2.0 * math.pi)
                count = max(int(math.ceil(abs(sweep) * self._depth / spacing)), 1)
                for a in a0 + sweep * np.linspace(0.0, 1.0, count + 1):
                    outline.append(verts[k] + self._depth * np.array([math.cos(a), math.sin(a)]))
            self._zone = np.array(outline)
        return self._zone


def approaching(track, model):
    """
    True if a track is inside the polygon, or within the approach zone and
    moving toward the polygon centroid at least at the speed threshold.
    """
    position = np.asarray(track.position, dtype=float)
    polygon = model.polygon()
    if point_in_polygon(position, polygon):
        return True
    if distance_to_polygon(position, polygon) > model.approach_zone_depth():
        return False
    velocity = np.asarray(track.velocity, dtype=float)
    if math.hypot(velocity[0], velocity[1]) < model.speed_threshold():
        return False
    return float(velocity @ (model.centroid() - position)) > 0.0


def _reported_position(report, now):
    lead = max(now - report.timestamp, 0.0) * report.speed
    return np.array([report.pose.x + lead * math.cos(report.pose.theta),
                     report.pose.y + lead * math.sin(report.pose.theta)])


def decide_warning(tracks, comm_states, model, now):
    """
    Warning decision from the current tracks and the latest reports of the
    communicating vehicles. Tracks within match_radius of a report,
    extrapolated to ``now``, are the reporting vehicles themselves and are
    ignored.

    :return: (active, cause track id or None)
    """
    reported = [_reported_position(r, now) for r in comm_states.values()]
    for track in sorted(tracks, key=lambda t: t.id):
        position = np.asarray(track.position, dtype=float)
        if any(math.hypot(*(position - p)) <= model.match_radius() for p in reported):
            continue
        if approaching(track, model):
            return True, track.id
    return False, None


class InfraState:
    """
    What the roadside unit knows: the current tracks, the latest report of
    every communicating vehicle and its warning decisions.
    """

    def __init__(self, sender=0):
        self._sender = sender
        self._tracks = []
        self._comm = {}
        self._warning_active = False
        self._last_emit = None
        self._log = []

    def sender(self):
        return self._sender

    def set_tracks(self, tracks):
        self._tracks = list(tracks)

    def tracks(self):
        return list(self._tracks)

    def receive(self, msg):
        """Stores a vehicle state report unless a newer one is known."""
        if msg.kind != VEHICLE_STATE:
            return
        known = self._comm.get(msg.sender)
        if known is None or msg.timestamp >= known.timestamp:
            self._comm[msg.sender] = CommReport(msg.payload.pose, msg.payload.speed, msg.timestamp)

    def comm_states(self):
        return dict(self._comm)

    def last_emit(self):
        return self._last_emit

    def warning_active(self):
        return self._warning_active

    def log(self):
        return list(self._log)

    def _record(self, decision, emitted):
        self._warning_active = decision.active
        self._log.append(decision)
        if emitted:
            self._last_emit = decision.t


def infra_decide(state, model, now):
    """
    Updates the warning state. A WARNING message is produced when the state
    changes and otherwise once per heartbeat.

    :param state: InfraState, updated in place
    :param model: IntersectionModel
    :param now: float
    :return: V2IMessage or None
    """
    active, cause = decide_warning(state.tracks(), state.comm_states(), model, now)
    changed = active != state.warning_active()
    last = state.last_emit()
    due = last is None or now - last >= model.heartbeat() - 1e-9
    emit = changed or due
    state._record(Decision(now, active, cause), emit)
    if changed:
        logger.debug('t=%.2f warning %s (track %s)', now, 'on' if active else 'off', cause)
    return warning_message(state.sender(), now, active, cause) if emit else None


class WarningLatch:
    """
    Keeps a vehicle stopped through short gaps in the warning it receives:
    the held state stays on until no active warning has been seen for more
    than ``hold`` seconds.
    """

    def __init__(self, hold):
        if hold < 0:
            raise ParameterError('hold must be non-negative, got {}'.format(hold))
        self._hold = float(hold)
        self._last_active = -math.inf

    def hold(self):
        return self._hold

    def update(self, active, now):
        """
        :param active: the warning state received by ``now``
        :return: bool, the held warning state
        """
        if active:
            self._last_active = now
        return now - self._last_active <= self._hold + 1e-9


def comm_vehicle_handle(warning_active, ctx):
    """
    Response of a communicating vehicle to the warning state.

    An active warning before the stop line brakes toward it with a margin on
    the deceleration. Past the line the vehicle keeps going to clear the
    box; without a warning it cruises.

    :param warning_active: bool
    :param ctx: VehicleContext
    :return: ControlIntent(mode in {'stop', 'continue', 'cruise'}, target_speed)
    """
    if ctx.stop_line is None:
        raise ConfigError('a communicating vehicle needs a stop line on its approach')
    if not warning_active:
        return ControlIntent('cruise', ctx.cruise_speed)
    signed = signed_stop_distance(ctx.state, ctx.params, ctx.stop_line)
    if signed >= 0:
        return ControlIntent('continue', ctx.cruise_speed)
    target = stop_controller(ctx.state, ctx.params, -signed, ctx.cruise_speed, ctx.margin, PLANNED_BRAKE_FRACTION)
    return ControlIntent('stop', target)


def presence_trigger(pose, params, model):
    """
    True when the footprint at the localized pose touches the scaled polygon.
    """
    return polygon_intersects_rect(model.polygon(), footprint(VehicleState(pose, 0.0, 0.0), params))
