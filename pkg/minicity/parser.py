import json
import logging
import math
import os

import numpy as np

from .city import DATA_DIR, approach_path, load_layout
from .errors import ConfigError, MinicityError
from .geometry import Pose2D
from .parameters import make_channel_params, make_lidar_params, make_slam_config, make_vehicle_params
from .scenario import (COMM, InfraParams, LocalizationModel, LocalizationRegion, ScenarioConfig, StoppingPlan,
                       VehicleSpec, validate_config)
from .v2i import IntersectionModel

__all__ = ['Parser', 'resolve_config', 'parse_drive', 'CONFIG_NAMES']

logger = logging.getLogger(__name__)

CONFIG_NAMES = ('fig1_crossing', 'tableIII_commA', 'tableIII_commB', 'tableV_stopping', 'tableV_centered')


def resolve_config(name_or_path):
    """Path of a scenario file, given either a path or the name of a bundled config."""
    if os.path.exists(name_or_path):
        return name_or_path
    bundled = os.path.join(DATA_DIR, name_or_path + '.json')
    if os.path.exists(bundled):
        return bundled
    raise ConfigError('no scenario file or bundled config named {!r}'.format(name_or_path))


class Parser:

    """Reads a scenario file and turns it into a ScenarioConfig

    Attributes:
        path:   string
                the scenario file that was read
        data:   dict
                its raw JSON content
    """

    __DEFAULTS = {'resolution': 0.05, 'dt': 0.05, 'duration': 12.0, 'seed': 0, 'trigger': 'warning',
                  'stop_margin': 0.05, 'warning_hold': 0.3}

    def __init__(self, file='fig1_crossing'):
        """The initialisation function.

        :param
            file:   string, optional (default = 'fig1_crossing')
                    a scenario JSON path or the name of a bundled config
        """
        self.path = resolve_config(file)
        try:
            with open(self.path) as fh:
                self.data = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError('{} is not valid JSON: {}'.format(self.path, err))
        if not isinstance(self.data, dict):
            raise ConfigError('{} must hold a JSON object'.format(self.path))

    def parse(self):
        """Parses the file into a validated ScenarioConfig.

        Vehicles are placed either by an explicit ``path`` of rear-axle
        waypoints or by an ``approach`` of the scenario's intersection with
        ``spawn_distance`` before its stop line and ``exit_distance`` past
        the far side.

        :return
            ScenarioConfig
        """
        d = self.data
        values = {k: d.get(k, v) for k, v in Parser.__DEFAULTS.items()}
        try:
            layout = load_layout(self._relative(d.get('city', 'default_city')))
            spec = self._intersection_spec(layout, d.get('intersection', 'I1'))
            model = self._model(spec, d.get('model', {}))
            vehicles = tuple(self._vehicle(v, spec) for v in d.get('vehicles', []))
            cfg = ScenarioConfig(
                name=d.get('name', os.path.splitext(os.path.basename(self.path))[0]),
                layout=layout,
                intersection_spec=spec,
                resolution=float(values['resolution']),
                dt=float(values['dt']),
                duration=float(values['duration']),
                seed=int(values['seed']),
                vehicles=vehicles,
                channel=make_channel_params(**d.get('channel', {})),
                localization=self._localization(d.get('localization', {})),
                intersection=model,
                infra=self._infra(d.get('infra', {})),
                trigger=values['trigger'],
                stop_margin=float(values['stop_margin']),
                warning_hold=float(values['warning_hold']),
                stopping=self._stopping(d['stopping']) if 'stopping' in d else None)
        except ConfigError:
            raise
        except (MinicityError, KeyError, TypeError, ValueError) as err:
            raise ConfigError('{}: {}: {}'.format(self.path, type(err).__name__, err))
        validate_config(cfg)
        logger.info('parsed scenario %s with %d vehicles', cfg.name, len(cfg.vehicles))
        return cfg

    def _relative(self, name):
        if name.endswith('.json') and not os.path.isabs(name):
            return os.path.join(os.path.dirname(self.path), name)
        return name

    @staticmethod
    def _intersection_spec(layout, name):
        for spec in layout.intersections:
            if spec.name == name:
                return spec
        raise ConfigError('layout {} has no intersection {!r}'.format(layout.name, name))

    @staticmethod
    def _model(spec, d):
        return IntersectionModel.from_spec(
            spec,
            scale=float(d.get('scale', 1.0)),
            center_offset=tuple(d.get('center_offset', (0.0, 0.0))),
            approach_zone_depth=float(d.get('approach_zone_depth', 1.0)),
            speed_threshold=float(d.get('speed_threshold', 0.05)),
            match_radius=float(d.get('match_radius', 0.3)),
            heartbeat=float(d.get('heartbeat', 0.1)))

    @staticmethod
    def _vehicle(d, spec):
        approach = d.get('approach')
        if 'path' in d:
            path = np.array(d['path'], dtype=float)
        elif approach is not None:
            path = approach_path(spec, approach, float(d.get('spawn_distance', 1.5)),
                                 float(d.get('exit_distance', 1.2)))
        else:
            raise ConfigError('vehicle {} needs a path or an approach'.format(d.get('id')))
        return VehicleSpec(id=int(d['id']),
                           role=d.get('role', COMM),
                           params=make_vehicle_params(**d.get('params', {})),
                           path=path,
                           cruise_speed=float(d.get('cruise_speed', 1.0)),
                           approach=approach,
                           spawn_jitter=float(d.get('spawn_jitter', 0.0)),
                           lookahead=float(d.get('lookahead', 0.5)))

    @staticmethod
    def _sigma(value):
        if isinstance(value, (list, tuple)):
            return tuple(float(v) for v in value)
        return float(value)

    @staticmethod
    def _localization(d):
        regions = tuple(LocalizationRegion(r['name'], tuple(float(v) for v in r['box']), Parser._sigma(r['sigma']))
                        for r in d.get('regions', []))
        if any(len(r.box) != 4 for r in regions):
            raise ConfigError('localization boxes are (xmin, ymin, xmax, ymax)')
        return LocalizationModel(float(d.get('default_sigma', 0.0)), regions, float(d.get('jitter_sigma', 0.0)))

    @staticmethod
    def _infra(d):
        lidar = dict(d.get('lidar', {}))
        if 'fov_deg' in lidar:
            lidar['fov'] = math.radians(lidar.pop('fov_deg'))
        lidar.setdefault('rate', 20.0)
        return InfraParams(enabled=bool(d.get('enabled', True)),
                           pose=Pose2D(*d.get('pose', (2.1, 2.5, 0.0))),
                           lidar=make_lidar_params(**lidar),
                           angle_threshold=math.radians(float(d.get('angle_threshold_deg', 10.0))),
                           min_cluster_size=int(d.get('min_cluster_size', 3)),
                           gate=float(d.get('gate', 0.5)),
                           max_misses=int(d.get('max_misses', 3)),
                           static_margin=float(d.get('static_margin', 0.1)),
                           smoothing=float(d.get('smoothing', 0.5)),
                           max_track_speed=float(d.get('max_track_speed', 5.0)))

    @staticmethod
    def _stopping(d):
        return StoppingPlan(approaches=tuple(d.get('approaches', ('N', 'E', 'S', 'W'))),
                            scales=tuple(float(s) for s in d.get('scales', (1.0, 1.25))),
                            trials_per_cell=int(d.get('trials_per_cell', 5)),
                            spawn_distance=float(d.get('spawn_distance', 1.5)),
                            exit_distance=float(d.get('exit_distance', 1.0)),
                            cruise_speed=float(d.get('cruise_speed', 0.8)),
                            params=make_vehicle_params(**d.get('params', {})),
                            lookahead=float(d.get('lookahead', 0.5)))


def parse_drive(file='mapping_drive'):
    """
    Reads a mapping-drive file: the city, the drive settings and the filter
    configuration used to map its log.

    :return: (CityLayout, dict of mapping_drive keyword arguments, SlamConfig)
    """
    path = resolve_config(file)
    try:
        with open(path) as fh:
            d = json.load(fh)
        layout = load_layout(d.get('city', 'default_city'))
        drive = dict(d.get('drive', {}))
        if 'odom_sigmas' in drive:
            drive['odom_sigmas'] = tuple(float(s) for s in drive['odom_sigmas'])
        if 'lidar' in drive:
            drive['lidar'] = make_lidar_params(**drive['lidar'])
        if 'vehicle' in drive:
            drive['vehicle'] = make_vehicle_params(**drive['vehicle'])
        slam = make_slam_config(**d.get('slam', {}))
    except ConfigError:
        raise
    except (MinicityError, KeyError, TypeError, ValueError) as err:
        raise ConfigError('{}: {}: {}'.format(path, type(err).__name__, err))
    return layout, drive, slam
