"""
Fixed-timestep simulation of vehicles crossing a smart intersection, batch
Monte-Carlo over seeds and the stopping-distance experiment.

Every tick runs in the same order: the roadside LiDAR senses, clusters and
tracks; communicating vehicles report their localized state; the
infrastructure decides and sends its warning; vehicles pick their commands;
dynamics are integrated; footprints are checked for overlap. Channel delays
are therefore quantized to whole ticks.

A communicating vehicle keeps acting on a warning until none has reached it
for warning_hold seconds.
"""
import collections
import concurrent.futures
import logging
import math

import numpy as np

from . import timing
from .city import approach_path, build_city
from .clustering import depth_cluster, filter_static
from .errors import ConfigError
from .geometry import Pose2D, rect_overlap
from .lidar import simulate_scan, static_ranges
from .metrics import mean_std
from .tracking import Tracker
from .v2i import (ChannelModel, InfraState, VehicleContext, WarningLatch, comm_vehicle_handle, infra_decide,
                  presence_trigger, vehicle_state_message)
from .vehicle import (ControlCommand, Path, VehicleState, footprint, pure_pursuit, signed_stop_distance, step)

__all__ = ['COMM', 'NON_COMM', 'TRIGGERS', 'VehicleSpec', 'LocalizationRegion', 'LocalizationModel', 'InfraParams',
           'StoppingPlan', 'ScenarioConfig', 'World', 'TrialResult', 'BatchSummary', 'StoppingCell',
           'StoppingTable', 'validate_config', 'prepare', 'localization_sigma', 'run_trial', 'run_trials',
           'summarize', 'run_batch', 'stopping_config', 'stopping_experiment']

logger = logging.getLogger(__name__)

COMM = 'COMM'
NON_COMM = 'NON_COMM'
TRIGGERS = ('warning', 'presence')

# Speeds at or below this count as standing still.
REST_SPEED = 1e-6
SUB_BATCH = 10

VehicleSpec = collections.namedtuple('VehicleSpec', [
    'id', 'role', 'params', 'path', 'cruise_speed', 'approach', 'spawn_jitter', 'lookahead'])
VehicleSpec.__doc__ = """A vehicle of a scenario.

path is an (n, 2) array of rear-axle waypoints; the vehicle spawns at its
start, moved along it by a Gaussian offset of spawn_jitter metres."""

LocalizationRegion = collections.namedtuple('LocalizationRegion', ['name', 'box', 'sigma'])
LocalizationRegion.__doc__ = """Axis-aligned box (xmin, ymin, xmax, ymax) with its localization sigma.

sigma is one value for both axes or an (x, y) pair, so that a region can be
less certain along its road than across it."""

LocalizationModel = collections.namedtuple('LocalizationModel', ['default_sigma', 'regions', 'jitter_sigma'])
LocalizationModel.__doc__ = """Error of the poses vehicles decide on.

Each trial draws one planar offset per region, sigma times a standard normal
pair taken per axis, which stays fixed for the whole trial. jitter_sigma adds
fresh noise every tick. The region is looked up at the true footprint center."""

InfraParams = collections.namedtuple('InfraParams', [
    'enabled', 'pose', 'lidar', 'angle_threshold', 'min_cluster_size', 'gate', 'max_misses', 'static_margin',
    'smoothing', 'max_track_speed'])

StoppingPlan = collections.namedtuple('StoppingPlan', [
    'approaches', 'scales', 'trials_per_cell', 'spawn_distance', 'exit_distance', 'cruise_speed', 'params',
    'lookahead'])

ScenarioConfig = collections.namedtuple('ScenarioConfig', [
    'name', 'layout', 'intersection_spec', 'resolution', 'dt', 'duration', 'seed', 'vehicles', 'channel',
    'localization', 'intersection', 'infra', 'trigger', 'stop_margin', 'warning_hold', 'stopping'])

World = collections.namedtuple('World', ['grid', 'infra_static'])

TrialResult = collections.namedtuple('TrialResult', [
    'seed', 'crashed', 'crash_time', 'crash_pair', 'traveling_time', 'stopping_distance', 'warnings',
    'trajectories'])
TrialResult.__doc__ = """Outcome of one trial.

traveling_time maps vehicle ids to the time the path was completed or None;
stopping_distance maps communicating vehicle ids to the signed rear-axle
distance to their stop line when they first came to rest, or None. warnings
holds rows (t, infrastructure warning, warning seen by each communicating
vehicle in id order) and trajectories map ids to rows (t, x, y, theta, speed)."""

BatchSummary = collections.namedtuple('BatchSummary', [
    'n', 'crashes', 'crash_rate', 'traveling_time', 'stopping_distance', 'trials'])
BatchSummary.__doc__ = """Aggregate of a batch.

crash_rate is (percent, std of the percent over full sub-batches of ten).
traveling_time and stopping_distance map vehicle ids to (mean, std, count)
over the trials that produced a value, or None."""

StoppingCell = collections.namedtuple('StoppingCell', ['approach', 'scale', 'mean', 'std', 'n', 'overruns',
                                                       'distances'])
StoppingTable = collections.namedtuple('StoppingTable', ['name', 'cells'])


def validate_config(cfg):
    """
    Checks the invariants a scenario needs before the first tick.

    :raise ConfigError: on the first violation found
    """
    if not cfg.dt > 0 or not cfg.duration > 0:
        raise ConfigError('dt and duration must be positive')
    if cfg.trigger not in TRIGGERS:
        raise ConfigError('trigger must be one of {}, got {!r}'.format(TRIGGERS, cfg.trigger))
    if cfg.stop_margin < 0 or cfg.warning_hold < 0:
        raise ConfigError('stop_margin and warning_hold must be non-negative')
    ids = [v.id for v in cfg.vehicles]
    if len(set(ids)) != len(ids):
        raise ConfigError('vehicle ids must be unique, got {}'.format(ids))
    for v in cfg.vehicles:
        if v.id < 1:
            raise ConfigError('vehicle ids start at 1, id 0 is the infrastructure')
        if v.role not in (COMM, NON_COMM):
            raise ConfigError('vehicle {} has unknown role {!r}'.format(v.id, v.role))
        if not v.cruise_speed > 0 or v.cruise_speed > v.params.max_speed:
            raise ConfigError('vehicle {} cruise speed must lie in (0, max_speed]'.format(v.id))
        if v.spawn_jitter < 0 or not v.lookahead > 0:
            raise ConfigError('vehicle {} needs spawn_jitter >= 0 and a positive lookahead'.format(v.id))
        Path(v.path)
        if v.role == COMM:
            if v.approach is None:
                raise ConfigError('communicating vehicle {} needs an approach'.format(v.id))
            cfg.intersection.stop_line(v.approach)
    loc = cfg.localization
    if loc.default_sigma < 0 or loc.jitter_sigma < 0:
        raise ConfigError('localization sigmas must be non-negative')
    for r in loc.regions:
        sigma = np.asarray(r.sigma, dtype=float)
        if sigma.shape not in ((), (2,)) or (sigma < 0).any():
            raise ConfigError('localization region {} needs a non-negative sigma or (x, y) pair'.format(r.name))
        if r.box[0] >= r.box[2] or r.box[1] >= r.box[3]:
            raise ConfigError('localization region {} has an empty box'.format(r.name))
    if cfg.infra.enabled and (cfg.infra.gate <= 0 or cfg.infra.max_track_speed <= 0):
        raise ConfigError('the tracking gate and track speed limit must be positive')


def prepare(cfg):
    """
    Builds what every trial of a scenario shares: the static grid and the
    roadside LiDAR's static ranges.
    """
    grid = build_city(cfg.layout, cfg.resolution)
    infra_static = None
    if cfg.infra.enabled:
        if not grid.contains_point(cfg.infra.pose.x, cfg.infra.pose.y):
            raise ConfigError('the infrastructure LiDAR lies outside the city')
        infra_static = static_ranges(grid, cfg.infra.pose, cfg.infra.lidar)
    return World(grid, infra_static)


def localization_sigma(model, point):
    """Index and sigma of the region containing ``point``; index -1 is the default."""
    for k, region in enumerate(model.regions):
        xmin, ymin, xmax, ymax = region.box
        if xmin <= point[0] <= xmax and ymin <= point[1] <= ymax:
            return k, region.sigma
    return -1, model.default_sigma


class _Agent:
    """Simulation-side state of one vehicle."""

    def __init__(self, spec, offset):
        self.spec = spec
        self.path = Path(spec.path)
        start = self.path.start_pose()
        x, y = self.path.point_at(offset)
        self.state = VehicleState(Pose2D(x, y, start.theta), spec.cruise_speed, 0.0)
        self.progress = offset
        self.finished = None
        self.parked = False
        self.triggered = False
        self.warning = False
        self.warning_stamp = -math.inf
        self.latch = None
        self.held = False
        self.stop_distance = None
        self.stop_line = None
        self.rows = []

    def active(self):
        return self.finished is None

    def center(self):
        return footprint(self.state, self.spec.params).center


def _localized(agent, model, biases, rng):
    center = agent.center()
    k, _ = localization_sigma(model, (center.x, center.y))
    bx, by = biases[k + 1]
    if model.jitter_sigma > 0:
        jx, jy = rng.normal(0.0, model.jitter_sigma, 2)
        bx, by = bx + jx, by + jy
    pose = agent.state.pose
    return agent.state._replace(pose=Pose2D(pose.x + bx, pose.y + by, pose.theta))


def _draw_biases(model, rng):
    sigmas = [model.default_sigma] + [r.sigma for r in model.regions]
    return [tuple(np.asarray(s, dtype=float) * rng.normal(0.0, 1.0, 2)) for s in sigmas]


def run_trial(cfg, seed, world=None):
    """
    Simulates one trial.

    :param cfg: ScenarioConfig
    :param seed: int, the only source of randomness of the trial
    :param world: World from prepare, built here when omitted
    :return: TrialResult
    """
    validate_config(cfg)
    world = prepare(cfg) if world is None else world
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(5)]
    spawn_rng, loc_rng, up_rng, down_rng, sensor_rng = streams

    agents = [_Agent(v, v.spawn_jitter * spawn_rng.normal()) for v in cfg.vehicles]
    comm = [a for a in agents if a.spec.role == COMM]
    for a in comm:
        a.stop_line = cfg.intersection.stop_line(a.spec.approach)
        a.latch = WarningLatch(cfg.warning_hold)
    biases = _draw_biases(cfg.localization, loc_rng)
    uplink = ChannelModel(cfg.channel, up_rng)
    downlink = ChannelModel(cfg.channel, down_rng)
    infra = InfraState()
    tracker = None
    sense_every = 1
    if cfg.infra.enabled:
        infra_cfg = cfg.infra
        tracker = Tracker(infra_cfg.gate, infra_cfg.max_misses, infra_cfg.smoothing, infra_cfg.max_track_speed)
        sense_every = max(1, int(round(1.0 / (infra_cfg.lidar.rate * cfg.dt))))

    crashed, crash_time, crash_pair = False, None, None
    timeline = []
    n_ticks = int(round(cfg.duration / cfg.dt))
    for k in range(n_ticks + 1):
        t = k * cfg.dt
        moving = [a for a in agents if a.active()]
        for a in moving:
            p = a.state.pose
            a.rows.append((t, p.x, p.y, p.theta, a.state.speed))

        if tracker is not None and k % sense_every == 0:
            obstacles = [footprint(a.state, a.spec.params) for a in moving]
            scan = simulate_scan(world.grid, obstacles, cfg.infra.pose, cfg.infra.lidar, sensor_rng, t,
                                 static=world.infra_static)
            clusters = depth_cluster(scan, cfg.infra.angle_threshold, cfg.infra.min_cluster_size,
                                     pose=cfg.infra.pose)
            clusters = filter_static(clusters, world.grid, cfg.infra.static_margin)
            infra.set_tracks(tracker.update(clusters, sense_every * cfg.dt))

        localized = {}
        for a in comm:
            if not a.active():
                continue
            localized[a.spec.id] = state = _localized(a, cfg.localization, biases, loc_rng)
            if cfg.trigger == 'warning':
                center = footprint(state, a.spec.params).center
                uplink.send(vehicle_state_message(a.spec.id, t, center, a.state.speed), t)

        if cfg.trigger == 'warning':
            for msg in uplink.receive(t):
                infra.receive(msg)
            warning = infra_decide(infra, cfg.intersection, t) if cfg.infra.enabled else None
            for a in comm:
                if warning is not None:
                    downlink.send(warning, t, receiver=a.spec.id)
                for msg in downlink.receive(t, receiver=a.spec.id):
                    if msg.timestamp >= a.warning_stamp:
                        a.warning, a.warning_stamp = msg.payload.active, msg.timestamp
                a.held = a.latch.update(a.warning, t)
            timeline.append([t, float(infra.warning_active())] + [float(a.warning) for a in comm])

        commands = {}
        for a in moving:
            pursuit = pure_pursuit(a.state, a.spec.params, a.path, a.spec.lookahead, a.progress)
            a.progress = pursuit.progress
            if pursuit.complete:
                a.finished = t
                continue
            target = a.spec.cruise_speed
            if a.spec.role == COMM:
                target = _comm_target(cfg, a, localized[a.spec.id])
            commands[a.spec.id] = ControlCommand(target, pursuit.steer)
        if k == n_ticks:
            break

        for a in agents:
            cmd = commands.get(a.spec.id)
            if cmd is None:
                continue
            a.state = step(a.state, a.spec.params, cmd, cfg.dt)
            if a.spec.role == COMM and a.stop_distance is None and a.state.speed <= REST_SPEED:
                a.stop_distance = signed_stop_distance(a.state, a.spec.params, a.stop_line)
                a.parked = a.triggered

        present = [a for a in agents if a.active()]
        rects = [footprint(a.state, a.spec.params) for a in present]
        for i in range(len(present)):
            for j in range(i + 1, len(present)):
                if rect_overlap(rects[i], rects[j]):
                    crashed, crash_time = True, t + cfg.dt
                    crash_pair = (present[i].spec.id, present[j].spec.id)
                    break
            if crashed:
                break
        if crashed:
            for a in present:
                p = a.state.pose
                a.rows.append((crash_time, p.x, p.y, p.theta, a.state.speed))
            logger.debug('seed %d: vehicles %s collide at t=%.2f', seed, crash_pair, crash_time)
            break
        if all(not a.active() or a.parked for a in agents):
            break

    traveling = {a.spec.id: a.finished for a in agents}
    stopping = {a.spec.id: a.stop_distance for a in comm}
    warnings = np.array(timeline, dtype=float).reshape(-1, 2 + len(comm))
    trajectories = {a.spec.id: np.array(a.rows, dtype=float).reshape(-1, 5) for a in agents}
    return TrialResult(seed, crashed, crash_time, crash_pair, traveling, stopping, warnings, trajectories)


def _comm_target(cfg, agent, localized):
    """Target speed of a communicating vehicle under the scenario's trigger."""
    params = agent.spec.params
    if cfg.trigger == 'presence':
        if not agent.triggered and presence_trigger(localized.pose, params, cfg.intersection):
            agent.triggered = True
            logger.debug('vehicle %d senses the intersection at %s', agent.spec.id, localized.pose)
        return 0.0 if agent.triggered else agent.spec.cruise_speed
    ctx = VehicleContext(localized, params, agent.stop_line, agent.spec.cruise_speed, cfg.stop_margin)
    return comm_vehicle_handle(agent.held, ctx).target_speed


def run_trials(cfg, seeds, world=None):
    """Runs trials for ``seeds`` in order, sharing one prepared world."""
    world = prepare(cfg) if world is None else world
    return [run_trial(cfg, seed, world) for seed in seeds]


def _chunks(seeds, workers):
    size = int(math.ceil(len(seeds) / float(workers)))
    return [seeds[i:i + size] for i in range(0, len(seeds), size)]


def _run_all(cfg, seeds, workers):
    validate_config(cfg)
    seeds = list(seeds)
    if workers <= 1 or len(seeds) <= 1:
        results = run_trials(cfg, seeds)
    else:
        results = []
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(run_trials, [cfg] * workers, _chunks(seeds, workers)):
                results.extend(part)
    return sorted(results, key=lambda r: r.seed)


def _value_stats(values):
    values = [v for v in values if v is not None]
    if not values:
        return None
    mean, std = mean_std(values)
    return mean, std, len(values)


def summarize(trials):
    """
    Aggregates TrialResults, taken in seed order.

    :return: BatchSummary
    """
    if not trials:
        raise ConfigError('nothing to summarize')
    trials = sorted(trials, key=lambda r: r.seed)
    crashes = sum(r.crashed for r in trials)
    rate = 100.0 * crashes / len(trials)
    subs = [100.0 * sum(r.crashed for r in trials[i:i + SUB_BATCH]) / SUB_BATCH
            for i in range(0, len(trials) - SUB_BATCH + 1, SUB_BATCH)]
    std = mean_std(subs)[1] if len(subs) > 1 else 0.0
    ids = sorted(trials[0].traveling_time)
    comm_ids = sorted(trials[0].stopping_distance)
    traveling = {i: _value_stats([r.traveling_time[i] for r in trials]) for i in ids}
    stopping = {i: _value_stats([r.stopping_distance[i] for r in trials]) for i in comm_ids}
    return BatchSummary(len(trials), crashes, (rate, std), traveling, stopping, trials)


@timing
def run_batch(cfg, n_trials, base_seed=None, workers=1):
    """
    Runs trials with seeds base_seed .. base_seed + n_trials - 1. The
    outcome does not depend on the number of workers.

    :param cfg: ScenarioConfig
    :param n_trials: int >= 1
    :param base_seed: int, the scenario seed by default
    :param workers: number of worker processes
    :return: BatchSummary
    """
    if n_trials < 1:
        raise ConfigError('n_trials must be at least 1')
    base_seed = cfg.seed if base_seed is None else base_seed
    trials = _run_all(cfg, range(base_seed, base_seed + n_trials), workers)
    summary = summarize(trials)
    logger.info('%s: %d trials, %d crashes (%.2f%%)', cfg.name, summary.n, summary.crashes, summary.crash_rate[0])
    return summary


def stopping_config(cfg, approach, scale):
    """
    Single-vehicle scenario of the stopping experiment: a communicating
    vehicle drives ``approach`` and halts once its localized footprint
    touches the intersection scaled by ``scale``.
    """
    plan = cfg.stopping
    if plan is None:
        raise ConfigError('scenario {} has no stopping plan'.format(cfg.name))
    path = approach_path(cfg.intersection_spec, approach, plan.spawn_distance, plan.exit_distance)
    vehicle = VehicleSpec(1, COMM, plan.params, path, plan.cruise_speed, approach, 0.0, plan.lookahead)
    return cfg._replace(vehicles=(vehicle,), trigger='presence', intersection=cfg.intersection.with_scale(scale),
                        infra=cfg.infra._replace(enabled=False))


@timing
def stopping_experiment(cfg, approaches=None, scales=None, trials_per_cell=None, base_seed=None, workers=1):
    """
    Stopping distance per approach and intersection scale. Every cell runs
    the same seeds. Trials whose vehicle never comes to rest are overruns,
    counted but left out of the mean and deviation.

    :return: StoppingTable with cells in approach-major order
    """
    plan = cfg.stopping
    if plan is None:
        raise ConfigError('scenario {} has no stopping plan'.format(cfg.name))
    approaches = plan.approaches if approaches is None else tuple(approaches)
    scales = plan.scales if scales is None else tuple(scales)
    trials_per_cell = plan.trials_per_cell if trials_per_cell is None else trials_per_cell
    if trials_per_cell < 1:
        raise ConfigError('trials_per_cell must be at least 1')
    base_seed = cfg.seed if base_seed is None else base_seed
    seeds = range(base_seed, base_seed + trials_per_cell)
    cells = []
    for approach in approaches:
        for scale in scales:
            trials = _run_all(stopping_config(cfg, approach, scale), seeds, workers)
            distances = [r.stopping_distance[1] for r in trials]
            kept = [d for d in distances if d is not None]
            overruns = len(distances) - len(kept)
            mean, std = mean_std(kept) if kept else (None, None)
            if overruns:
                logger.warning('%s x%.2f: %d of %d trials never stopped', approach, scale, overruns, len(trials))
            cells.append(StoppingCell(approach, float(scale), mean, std, len(kept), overruns, distances))
    return StoppingTable(cfg.name, cells)
