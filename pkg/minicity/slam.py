"""
Grid mapping with a Rao-Blackwellized particle filter, plus the scripted
mapping drive that produces its input.

Each particle carries a pose hypothesis, a weight, its own log-odds map
and its trajectory. Scans are weighted against a likelihood field built
from the particle's map, then integrated into that map.
"""
import collections
import logging
import math

import numpy as np
from scipy import ndimage

from . import timing
from .city import build_city
from .errors import ParameterError
from .geometry import Pose2D, compose, relative
from .grid import LogOddsGrid
from .lidar import noisy_odometry, simulate_scan
from .parameters import DEFAULT_LIDAR, make_vehicle_params
from .scanlog import ScanRecord
from .vehicle import ControlCommand, Path, VehicleState, fillet_path, pure_pursuit, step

__all__ = ['Particle', 'init_particles', 'integrate_scan', 'scan_log_likelihood', 'effective_sample_size',
           'systematic_resample', 'rbpf_step', 'best_map', 'ParticleFilter', 'gated_updates',
           'dead_reckon', 'map_known_poses', 'perimeter_path', 'mapping_drive']

logger = logging.getLogger(__name__)

Particle = collections.namedtuple('Particle', ['pose', 'weight', 'map', 'trajectory'])


def init_particles(cfg, frame, pose):
    """
    Particles at a known start pose with empty maps.

    :param cfg: SlamConfig
    :param frame: grid whose shape, resolution and origin the maps take
    :param pose: Pose2D
    :return: list of Particle
    """
    n = cfg.particle_count
    empty = LogOddsGrid.like(frame)
    return [Particle(pose, 1.0 / n, empty.copy(), (pose,)) for _ in range(n)]


def _beams(pose, scan, stride):
    idx = np.arange(0, scan.ranges.size, stride)
    r = scan.ranges[idx]
    a = pose.theta + scan.angles[idx]
    return r, a


def _integrate_inplace(grid, pose, scan, cfg):
    res = grid.resolution()
    r, a = _beams(pose, scan, cfg.map_beam_step)
    hit = np.isfinite(r)
    carve = np.where(hit, r, cfg.no_hit_fraction * cfg.max_range)
    cos_a, sin_a = np.cos(a), np.sin(a)
    width = grid.width()
    log_odds = grid.log_odds().reshape(-1)

    # cells along each beam, sampled every half cell
    spacing = 0.5 * res
    count = int(math.ceil(carve.max() / spacing)) if carve.size else 0
    t = np.arange(count) * spacing
    along = t[None, :] < carve[:, None]
    xs = pose.x + t[None, :] * cos_a[:, None]
    ys = pose.y + t[None, :] * sin_a[:, None]
    ci, cj = grid.world_to_cell(xs[along], ys[along])
    inside = grid.contains_cell(ci, cj)
    missed = np.zeros(log_odds.size, dtype=bool)
    missed[cj[inside] * width + ci[inside]] = True

    # the return lands half a cell behind the measured surface, inside the cell that owns it
    reach = r[hit] + 0.5 * res
    hi, hj = grid.world_to_cell(pose.x + reach * cos_a[hit], pose.y + reach * sin_a[hit])
    inside = grid.contains_cell(hi, hj)
    hits = np.zeros(log_odds.size, dtype=bool)
    hits[hj[inside] * width + hi[inside]] = True
    missed &= ~hits

    log_odds[hits] += cfg.hit
    log_odds[missed] -= cfg.miss
    np.clip(log_odds, -cfg.l_max, cfg.l_max, out=log_odds)


def integrate_scan(grid, pose, scan, cfg):
    """
    Inverse sensor model update: cells holding a return gain ``hit``,
    cells crossed on the way lose ``miss``, all clamped to +-l_max. Beams
    without a return clear space up to no_hit_fraction of the max range.

    :param grid: LogOddsGrid, left unchanged
    :param pose: Pose2D of the sensor
    :param scan: LidarScan
    :param cfg: SlamConfig
    :return: updated LogOddsGrid
    """
    out = grid.copy()
    _integrate_inplace(out, pose, scan, cfg)
    return out


def _likelihood_field(grid, cfg):
    occupied = grid.log_odds() > 0.0
    if not occupied.any():
        return np.full(grid.shape(), cfg.likelihood_max_dist)
    distance = ndimage.distance_transform_edt(~occupied) * grid.resolution()
    return np.minimum(distance, cfg.likelihood_max_dist)


def scan_log_likelihood(grid, pose, scan, cfg, field=None):
    """
    Log-likelihood of a scan under the likelihood-field model: every
    return scores -d^2 / (2 sigma^2) where d is its distance to the nearest
    occupied cell, capped at likelihood_max_dist. Returns outside the map
    score the cap. A pose outside the map is impossible.

    :return: float, -inf for poses outside the map
    """
    if not grid.contains_point(pose.x, pose.y):
        return -math.inf
    if field is None:
        field = _likelihood_field(grid, cfg)
    r, a = _beams(pose, scan, cfg.beam_step)
    hit = np.isfinite(r)
    reach = r[hit] + 0.5 * grid.resolution()
    i, j = grid.world_to_cell(pose.x + reach * np.cos(a[hit]), pose.y + reach * np.sin(a[hit]))
    d = np.full(i.shape, cfg.likelihood_max_dist)
    inside = grid.contains_cell(i, j)
    d[inside] = field[j[inside], i[inside]]
    return float(-(d ** 2).sum() / (2.0 * cfg.likelihood_sigma ** 2))


def effective_sample_size(weights):
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w ** 2))


def systematic_resample(weights, rng):
    """
    Systematic resampling with a single uniform offset.

    :return: int array of the chosen particle indices
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    positions = (rng.uniform() + np.arange(n)) / n
    cumulative = np.cumsum(w)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side='right')


def _rbpf_step(particles, odom_delta, scan, cfg, rng):
    n = len(particles)
    sigmas = np.asarray(cfg.motion_sigmas, dtype=float)
    noise = rng.normal(0.0, 1.0, (n, 3)) * sigmas
    delta = np.asarray(odom_delta, dtype=float)
    poses = [compose(p.pose, delta + noise[k]) for k, p in enumerate(particles)]
    log_l = np.array([scan_log_likelihood(p.map, pose, scan, cfg) for p, pose in zip(particles, poses)])

    prior = np.array([p.weight for p in particles])
    reset = not np.isfinite(log_l).any()
    if not reset:
        weights = prior * np.exp(log_l - log_l[np.isfinite(log_l)].max())
        reset = not weights.sum() > 0
    if reset:
        logger.warning('all particle weights vanished, resetting to uniform')
        weights = np.full(n, 1.0 / n)
    weights = weights / weights.sum()

    updated = [Particle(pose, float(w), integrate_scan(p.map, pose, scan, cfg), p.trajectory + (pose,))
               for p, pose, w in zip(particles, poses, weights)]

    resampled = effective_sample_size(weights) < cfg.resample_threshold * n
    if resampled:
        chosen = systematic_resample(weights, rng)
        logger.debug('resampling, %d distinct particles survive', len(set(chosen.tolist())))
        seen = set()
        survivors = []
        for k in chosen:
            source = updated[k]
            grid = source.map if k not in seen else source.map.copy()
            seen.add(k)
            survivors.append(Particle(source.pose, 1.0 / n, grid, source.trajectory))
        updated = survivors
    return updated, resampled, reset


def rbpf_step(particles, odom_delta, scan, cfg, rng):
    """
    One filter update: propagate each particle with the odometry plus
    motion noise, weight it by the scan likelihood under its own map,
    integrate the scan, and resample systematically when the effective
    sample size drops below resample_threshold * N.

    :param particles: list of Particle
    :param odom_delta: (dx, dy, dtheta) since the previous update
    :param scan: LidarScan
    :param cfg: SlamConfig
    :param rng: numpy Generator
    :return: list of Particle
    """
    return _rbpf_step(particles, odom_delta, scan, cfg, rng)[0]


def best_map(particles, cfg):
    """Thresholded map of the highest-weight particle, the first on ties."""
    k = int(np.argmax([p.weight for p in particles]))
    return particles[k].map.threshold(cfg.tau_occ, cfg.tau_free)


def gated_updates(records, cfg):
    """
    Yields (index, accumulated odometry) for the records that trigger a
    map update. The first record is always used with no motion; afterwards
    odometry is accumulated until the robot has moved linear_update metres
    or turned angular_update radians.
    """
    origin = Pose2D(0.0, 0.0, 0.0)
    acc = origin
    for k, record in enumerate(records):
        if k == 0:
            yield 0, (0.0, 0.0, 0.0)
            continue
        acc = compose(acc, record.odom)
        if math.hypot(acc.x, acc.y) >= cfg.linear_update or abs(acc.theta) >= cfg.angular_update:
            yield k, (acc.x, acc.y, acc.theta)
            acc = origin


def dead_reckon(records, cfg):
    """Poses at the gated updates obtained by chaining odometry from the first true pose."""
    poses = []
    pose = records[0].pose
    for k, delta in gated_updates(records, cfg):
        if k:
            pose = compose(pose, delta)
        poses.append((k, pose))
    return poses


def map_known_poses(records, frame, cfg, poses=None):
    """
    Maps a log at given poses.

    :param records: list of ScanRecord
    :param frame: grid giving the map frame
    :param poses: list of (record index, Pose2D); default the true pose of
                  every gated record
    :return: OccupancyGrid
    """
    if poses is None:
        poses = [(k, records[k].pose) for k, _ in gated_updates(records, cfg)]
    grid = LogOddsGrid.like(frame)
    for k, pose in poses:
        _integrate_inplace(grid, pose, records[k].scan, cfg)
    return grid.threshold(cfg.tau_occ, cfg.tau_free)


class ParticleFilter:
    """
    Runs the filter over a scan log.
    """

    def __init__(self, cfg, frame, start_pose, rng):
        """
        :param cfg: SlamConfig
        :param frame: grid giving the map frame
        :param start_pose: Pose2D of the first record
        :param rng: numpy Generator
        """
        self._cfg = cfg
        self._rng = rng
        self._particles = init_particles(cfg, frame, start_pose)
        self._updates = 0
        self._resamples = 0
        self._resets = 0

    def particles(self):
        return self._particles

    def stats(self):
        return {'updates': self._updates, 'resamples': self._resamples, 'resets': self._resets}

    def initialize(self, scan):
        """Integrates the first scan at the start pose."""
        self._particles = [p._replace(map=integrate_scan(p.map, p.pose, scan, self._cfg)) for p in self._particles]

    def update(self, odom_delta, scan):
        self._particles, resampled, reset = _rbpf_step(self._particles, odom_delta, scan, self._cfg, self._rng)
        self._updates += 1
        self._resamples += int(resampled)
        self._resets += int(reset)

    @timing
    def run(self, records):
        """
        :param records: list of ScanRecord
        :return: OccupancyGrid of the best particle
        """
        for k, delta in gated_updates(records, self._cfg):
            if k == 0:
                self.initialize(records[0].scan)
            else:
                self.update(delta, records[k].scan)
        logger.info('filter finished: %s', self.stats())
        return best_map(self._particles, self._cfg)


def perimeter_path(layout, inset=0.45, radius=1.6, loops=3):
    """
    Closed counter-clockwise loop around the city at ``inset`` from its
    bounds with rounded corners.
    """
    bx, by = layout.bounds
    corners = [(inset, inset), (bx - inset, inset), (bx - inset, by - inset), (inset, by - inset)]
    return Path(fillet_path(corners, radius, closed=True, loops=loops))


@timing
def mapping_drive(layout, loops=3, speed=0.3, dt=0.05, scan_interval=0.5, odom_sigmas=(0.005, 0.005, 0.005),
                  lidar=DEFAULT_LIDAR, resolution=0.05, lookahead=0.5, seed=0, vehicle=None):
    """
    Drives a vehicle around the city perimeter and records a scan log.

    :param layout: CityLayout
    :param loops: number of laps
    :param speed: cruise speed in m/s
    :param dt: integration step
    :param scan_interval: time between logged scans
    :param odom_sigmas: odometry noise per record
    :param seed: seed of the odometry and range noise
    :return: list of ScanRecord
    """
    if not (speed > 0 and dt > 0 and scan_interval >= dt):
        raise ParameterError('need speed > 0, dt > 0 and scan_interval >= dt')
    params = vehicle if vehicle is not None else make_vehicle_params()
    grid = build_city(layout, resolution)
    path = perimeter_path(layout, loops=loops)
    odom_rng, scan_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))

    state = VehicleState(path.start_pose(), speed, 0.0)
    records = [ScanRecord(0.0, state.pose, (0.0, 0.0, 0.0),
                          simulate_scan(grid, [], state.pose, lidar, scan_rng, 0.0))]
    every = max(int(round(scan_interval / dt)), 1)
    progress, tick = 0.0, 0
    while True:
        pursuit = pure_pursuit(state, params, path, lookahead, progress)
        progress = pursuit.progress
        if pursuit.complete:
            break
        state = step(state, params, ControlCommand(speed, pursuit.steer), dt)
        tick += 1
        if tick % every == 0:
            t = tick * dt
            odom = noisy_odometry(relative(records[-1].pose, state.pose), odom_sigmas, odom_rng)
            records.append(ScanRecord(t, state.pose, odom, simulate_scan(grid, [], state.pose, lidar, scan_rng, t)))
    logger.info('mapping drive: %d records over %.1f s', len(records), tick * dt)
    return records
