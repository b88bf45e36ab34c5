"""
The ``minicity`` command.

Exit codes: 0 success, 1 usage error, 2 invalid configuration or input,
3 any other failure. Diagnostics go to standard error; results go to files
under --out and summaries to standard output.
"""
import argparse
import glob
import hashlib
import json
import logging
import os
import sys

import matplotlib
import numpy as np

from . import __version__
from .city import DATA_DIR, build_city, load_layout
from .errors import ConfigError, MinicityError, ResultsIOError
from .gridio import read_grid, write_grid
from .metrics import depth_report, evaluate_depth, evaluate_maps, map_report, read_depth_csv
from .parameters import default_parameters
from .parser import Parser, parse_drive
from .results import emit_results, stopping_table
from .scanlog import read_log, write_log
from .scenario import COMM, run_batch, stopping_experiment
from .slam import ParticleFilter, mapping_drive

__all__ = ['main', 'build_parser', 'config_hash', 'EXIT_OK', 'EXIT_USAGE', 'EXIT_CONFIG', 'EXIT_RUNTIME']

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR']


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError('{}: error: {}'.format(self.prog, message))


def config_hash():
    """SHA-256 prefix over the bundled configuration files."""
    digest = hashlib.sha256()
    for path in sorted(glob.glob(os.path.join(DATA_DIR, '*.json'))):
        digest.update(os.path.basename(path).encode())
        with open(path, 'rb') as fh:
            digest.update(fh.read())
    return digest.hexdigest()[:12]


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma-separated numbers, got {!r}'.format(text))


def _approaches(text):
    values = tuple(v.strip().upper() for v in text.split(','))
    if not all(v in ('N', 'E', 'S', 'W') for v in values):
        raise argparse.ArgumentTypeError('approaches are N, E, S and W, got {!r}'.format(text))
    return values


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        value = 0
    if value < 1:
        raise argparse.ArgumentTypeError('expected a positive integer, got {!r}'.format(text))
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=None, help='base seed (default: from the config)')
    common.add_argument('--out', default=None, help='output file or directory')
    common.add_argument('--workers', type=_positive_int, default=1, help='worker processes for trials')
    common.add_argument('--log-level', default=argparse.SUPPRESS, choices=LOG_LEVELS)

    parser = _ArgumentParser(prog='minicity', description='Mini-city mapping and smart-intersection simulator.')
    parser.add_argument('--version', action='version',
                        version='minicity {} (configs {})'.format(__version__, config_hash()))
    parser.add_argument('--log-level', default='WARNING', choices=LOG_LEVELS)
    sub = parser.add_subparsers(dest='command', metavar='command', parser_class=_ArgumentParser)
    sub.required = True

    p = sub.add_parser('build-map', parents=[common], help='rasterize a city layout into a grid file')
    p.add_argument('--city', default='default_city', help='bundled layout name or JSON path')
    p.add_argument('--resolution', type=float, default=0.05)

    p = sub.add_parser('run', parents=[common], help='Monte-Carlo batch of an intersection scenario')
    p.add_argument('--config', required=True, help='scenario JSON path or bundled name')
    p.add_argument('--trials', type=_positive_int, default=10)
    p.add_argument('--plot', action='store_true', help='also draw the first trial')

    p = sub.add_parser('stopping', parents=[common], help='stopping distance per approach and scale')
    p.add_argument('--config', required=True, help='scenario JSON path or bundled name')
    p.add_argument('--scales', type=_floats, default=None, help='e.g. 1.0,1.25')
    p.add_argument('--approaches', type=_approaches, default=None, help='e.g. N,E,S,W')
    p.add_argument('--trials', type=_positive_int, default=None, help='trials per cell')

    p = sub.add_parser('record', parents=[common], help='drive the mapping loop and record a scan log')
    p.add_argument('--config', default='mapping_drive', help='drive JSON path or bundled name')

    p = sub.add_parser('slam', parents=[common], help='build a map from a scan log')
    p.add_argument('--log', required=True, help='scan log (JSON lines)')
    p.add_argument('--config', default='mapping_drive', help='drive JSON holding the filter settings')
    p.add_argument('--particles', type=_positive_int, default=None)

    p = sub.add_parser('map-eval', parents=[common], help='compare an estimated map with the ground truth')
    p.add_argument('--gt', required=True)
    p.add_argument('--est', required=True)
    p.add_argument('--align', action='store_true', help='search a rigid alignment first')
    p.add_argument('--plot', default=None, metavar='FILE', help='write an overlay figure')

    p = sub.add_parser('depth-eval', parents=[common], help='MAE and MRE of depth predictions')
    p.add_argument('--pred', required=True, help='CSV of predictions, or of (pred, gt) pairs')
    p.add_argument('--gt', default=None, help='CSV of ground-truth depths')
    p.add_argument('--name', default='model')
    p.add_argument('--inference-time', type=float, default=None)

    p = sub.add_parser('params', parents=[common], help='show parameter defaults')
    p.add_argument('--dump', action='store_true', help='print the defaults as JSON')
    return parser


def _out_dir(args):
    out = args.out or 'results'
    os.makedirs(out, exist_ok=True)
    return out


def _build_map(args):
    layout = load_layout(args.city)
    grid = build_city(layout, args.resolution)
    path = args.out or '{}.pgm'.format(layout.name)
    write_grid(grid, path)
    print('{}: {}x{} cells, {:.1%} occupied'.format(path, grid.width(), grid.height(), grid.occupied_fraction()))


def _run(args):
    cfg = Parser(args.config).parse()
    summary = run_batch(cfg, args.trials, args.seed, args.workers)
    out = _out_dir(args)
    emit_results(summary, os.path.join(out, '{}_summary.json'.format(cfg.name)), name=cfg.name)
    emit_results(summary, os.path.join(out, '{}_trials.csv'.format(cfg.name)))
    rate, std = summary.crash_rate
    print('{}: {} trials, crashes {:.2f}±{:.2f}%'.format(cfg.name, summary.n, rate, std))
    for v in cfg.vehicles:
        travel = summary.traveling_time[v.id]
        text = '-' if travel is None else '{:.2f}±{:.2f} s over {}'.format(*travel)
        print('  vehicle {} ({}): traveling time {}'.format(v.id, 'comm' if v.role == COMM else 'non-comm', text))
    if args.plot:
        from .misc import Analyser
        Analyser(cfg.layout).plot_trial(summary.trials[0], cfg, filename=os.path.join(out, '{}_trial.png'.format(
            cfg.name)))


def _stopping(args):
    cfg = Parser(args.config).parse()
    table = stopping_experiment(cfg, args.approaches, args.scales, args.trials, args.seed, args.workers)
    out = _out_dir(args)
    emit_results(table, os.path.join(out, '{}_stopping.json'.format(cfg.name)))
    emit_results(table, os.path.join(out, '{}_stopping.csv'.format(cfg.name)))
    sys.stdout.write(stopping_table(table))


def _record(args):
    layout, drive, _ = parse_drive(args.config)
    if args.seed is not None:
        drive['seed'] = args.seed
    records = mapping_drive(layout, **drive)
    path = args.out or 'scans.jsonl'
    write_log(records, path)
    print('{}: {} scans'.format(path, len(records)))


def _slam(args):
    layout, drive, cfg = parse_drive(args.config)
    if args.particles is not None:
        cfg = cfg._replace(particle_count=args.particles)
    records = read_log(args.log)
    if not records:
        raise ConfigError('scan log {} is empty'.format(args.log))
    frame = build_city(layout, cfg.resolution)
    seed = drive.get('seed', 0) if args.seed is None else args.seed
    grid = ParticleFilter(cfg, frame, records[0].pose, np.random.default_rng(seed)).run(records)
    path = args.out or 'estimate.pgm'
    write_grid(grid, path)
    print('{}: {:.1%} occupied, {:.1%} known'.format(path, grid.occupied_fraction(), grid.known().mean()))


def _map_eval(args):
    gt, est = read_grid(args.gt), read_grid(args.est)
    report = evaluate_maps(gt, est, align=args.align)
    sys.stdout.write(map_report(report))
    if args.out:
        data = dict(report._asdict(), transform=list(report.transform))
        _write_json(data, args.out)
    if args.plot:
        from .misc import Analyser
        Analyser().plot_overlay(gt, est, filename=args.plot)


def _depth_eval(args):
    pred = read_depth_csv(args.pred)
    if args.gt is None:
        if pred.ndim != 2 or pred.shape[1] != 2:
            raise ConfigError('without --gt the prediction file needs two columns')
        pred, gt = pred[:, 0], pred[:, 1]
    else:
        gt = read_depth_csv(args.gt)
    row = evaluate_depth(pred, gt, args.name, args.inference_time)
    sys.stdout.write(depth_report([row]))
    if args.out:
        _write_json(row._asdict(), args.out)


def _params(args):
    text = json.dumps(default_parameters(), indent=2)
    if args.out:
        _write_json(default_parameters(), args.out)
    print(text)


def _write_json(data, path):
    try:
        with open(path, 'w') as fh:
            json.dump(data, fh, indent=2)
            fh.write('\n')
    except OSError as err:
        raise ResultsIOError('cannot write {}: {}'.format(path, err))


_COMMANDS = {'build-map': _build_map, 'run': _run, 'stopping': _stopping, 'record': _record, 'slam': _slam,
             'map-eval': _map_eval, 'depth-eval': _depth_eval, 'params': _params}


def main(argv=None):
    """
    Runs the command line.

    :param argv: list of arguments without the program name, sys.argv by default
    :return: exit code
    """
    matplotlib.use('Agg')
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as err:
        sys.stderr.write('{}\n'.format(err))
        return EXIT_USAGE
    except SystemExit as err:
        # --help and --version
        return err.code if isinstance(err.code, int) else EXIT_OK
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, args.log_level),
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        _COMMANDS[args.command](args)
    except (MinicityError, ValueError) as err:
        if isinstance(err, OSError):
            sys.stderr.write('minicity: {}\n'.format(err))
            return EXIT_RUNTIME
        sys.stderr.write('minicity: {}\n'.format(err))
        return EXIT_CONFIG
    except Exception as err:
        logger.debug('unexpected failure', exc_info=True)
        sys.stderr.write('minicity: {}: {}\n'.format(type(err).__name__, err))
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
