"""
Default parameter sets and the quantities derived from them.

Each parameter set is an immutable namedtuple. ``make_*`` helpers fill in
defaults, apply overrides and validate ranges.
"""
import collections
import math

from .errors import ParameterError

__all__ = ['VehicleParams', 'LidarParams', 'SlamConfig', 'ChannelParams', 'Parameters',
           'make_vehicle_params', 'make_lidar_params', 'make_slam_config', 'make_channel_params',
           'default_parameters', 'DEFAULT_VEHICLE', 'DEFAULT_LIDAR', 'DEFAULT_SLAM', 'DEFAULT_CHANNEL']

VehicleParams = collections.namedtuple('VehicleParams', [
    'wheelbase', 'max_steer', 'length', 'width', 'max_speed', 'max_accel', 'max_decel', 'rear_axle_offset'])
VehicleParams.__doc__ = """Geometry and limits of a car-like vehicle.

rear_axle_offset is the distance from the rear axle forward to the footprint center."""

LidarParams = collections.namedtuple('LidarParams', [
    'min_range', 'max_range', 'beams', 'fov', 'range_noise_sigma', 'rate'])

SlamConfig = collections.namedtuple('SlamConfig', [
    'particle_count', 'resolution', 'motion_sigmas', 'hit', 'miss', 'l_max', 'tau_occ', 'tau_free',
    'likelihood_sigma', 'likelihood_max_dist', 'resample_threshold', 'beam_step', 'map_beam_step',
    'no_hit_fraction', 'max_range', 'linear_update', 'angular_update'])

ChannelParams = collections.namedtuple('ChannelParams', ['base_latency', 'jitter_sigma', 'drop_prob'])


class Parameters:
    """
    Steering geometry of a car-like vehicle. The steering limit follows
    from the minimum turning radius of the rear axle and the wheelbase.
    """

    def __init__(self, wheelbase=0.33, turning_radius=1.47):
        """
        :param wheelbase: float (default: 0.33)
                          distance between the axles in metres
        :param turning_radius: float (default: 1.47)
                               minimum turning radius in metres
        """
        if not wheelbase > 0 or not turning_radius > 0:
            raise ParameterError('wheelbase and turning radius must be positive')
        self._wheelbase = float(wheelbase)
        self._turning_radius = float(turning_radius)
        self._max_steer = math.atan(self._wheelbase / self._turning_radius)

    def wheelbase(self):
        return self._wheelbase

    def turning_radius(self):
        return self._turning_radius

    def max_steer(self):
        """
        :return: float
                 steering angle limit in radians
        """
        return self._max_steer

    @staticmethod
    def radius_for(wheelbase, steer):
        """Turning radius of the rear axle at a steering angle."""
        if steer == 0:
            return math.inf
        return wheelbase / math.tan(abs(steer))


def _override(defaults, cls, overrides):
    unknown = set(overrides) - set(cls._fields)
    if unknown:
        raise ParameterError('unknown {} fields: {}'.format(cls.__name__, ', '.join(sorted(unknown))))
    values = dict(defaults._asdict())
    values.update(overrides)
    return cls(**values)


_GEOMETRY = Parameters()

DEFAULT_VEHICLE = VehicleParams(wheelbase=_GEOMETRY.wheelbase(), max_steer=_GEOMETRY.max_steer(),
                                length=0.51, width=0.30, max_speed=2.0, max_accel=1.0, max_decel=1.5,
                                rear_axle_offset=0.165)

DEFAULT_LIDAR = LidarParams(min_range=0.12, max_range=10.0, beams=360, fov=2.0 * math.pi,
                            range_noise_sigma=0.01, rate=7.0)

DEFAULT_SLAM = SlamConfig(particle_count=30, resolution=0.05, motion_sigmas=(0.01, 0.01, 0.01),
                          hit=0.85, miss=0.4, l_max=10.0, tau_occ=2.0, tau_free=-2.0,
                          likelihood_sigma=0.1, likelihood_max_dist=0.3, resample_threshold=0.5,
                          beam_step=4, map_beam_step=2, no_hit_fraction=0.95, max_range=10.0,
                          linear_update=0.2, angular_update=0.2)

DEFAULT_CHANNEL = ChannelParams(base_latency=0.0, jitter_sigma=0.0, drop_prob=0.0)


def make_vehicle_params(**overrides):
    """
    Vehicle parameters with overrides. ``turning_radius`` may be given in
    place of max_steer.
    """
    if 'turning_radius' in overrides:
        radius = overrides.pop('turning_radius')
        wheelbase = overrides.get('wheelbase', DEFAULT_VEHICLE.wheelbase)
        overrides['max_steer'] = Parameters(wheelbase, radius).max_steer()
    params = _override(DEFAULT_VEHICLE, VehicleParams, overrides)
    for name in ('wheelbase', 'length', 'width', 'max_speed', 'max_accel', 'max_decel'):
        if not getattr(params, name) > 0:
            raise ParameterError('{} must be positive'.format(name))
    if not 0 < params.max_steer < math.pi / 2:
        raise ParameterError('max_steer must lie in (0, pi/2)')
    return params


def make_lidar_params(**overrides):
    params = _override(DEFAULT_LIDAR, LidarParams, overrides)
    if not 0 < params.min_range < params.max_range:
        raise ParameterError('need 0 < min_range < max_range')
    if params.beams < 2 or not 0 < params.fov <= 2.0 * math.pi:
        raise ParameterError('need beams >= 2 and fov in (0, 2pi]')
    if params.range_noise_sigma < 0 or not params.rate > 0:
        raise ParameterError('range_noise_sigma must be >= 0 and rate > 0')
    return params._replace(beams=int(params.beams))


def make_slam_config(**overrides):
    if 'motion_sigmas' in overrides:
        overrides['motion_sigmas'] = tuple(float(s) for s in overrides['motion_sigmas'])
    cfg = _override(DEFAULT_SLAM, SlamConfig, overrides)
    if cfg.particle_count < 1:
        raise ParameterError('particle_count must be at least 1')
    if len(cfg.motion_sigmas) != 3 or min(cfg.motion_sigmas) < 0:
        raise ParameterError('motion_sigmas must be three non-negative values')
    if cfg.tau_free >= cfg.tau_occ:
        raise ParameterError('tau_free must be below tau_occ')
    if not (cfg.hit > 0 and cfg.miss > 0 and cfg.l_max > 0 and cfg.likelihood_sigma > 0):
        raise ParameterError('hit, miss, l_max and likelihood_sigma must be positive')
    if not 0 < cfg.resample_threshold <= 1 or cfg.beam_step < 1 or cfg.map_beam_step < 1:
        raise ParameterError('bad resampling threshold or beam step')
    return cfg._replace(particle_count=int(cfg.particle_count))


def make_channel_params(**overrides):
    params = _override(DEFAULT_CHANNEL, ChannelParams, overrides)
    if params.base_latency < 0 or params.jitter_sigma < 0:
        raise ParameterError('latency and jitter must be non-negative')
    if not 0 <= params.drop_prob <= 1:
        raise ParameterError('drop_prob must lie in [0, 1]')
    return params


def default_parameters():
    """All default parameter sets as plain dictionaries, for ``params --dump``."""
    return collections.OrderedDict([
        ('vehicle', dict(DEFAULT_VEHICLE._asdict(), turning_radius=_GEOMETRY.turning_radius())),
        ('lidar', dict(DEFAULT_LIDAR._asdict())),
        ('slam', dict(DEFAULT_SLAM._asdict(), motion_sigmas=list(DEFAULT_SLAM.motion_sigmas))),
        ('channel', dict(DEFAULT_CHANNEL._asdict())),
    ])
