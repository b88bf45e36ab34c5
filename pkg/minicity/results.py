"""
Result files and the text tables of the crash and stopping experiments.

JSON keys keep a fixed order and floats are rounded to six decimals, so
equal results give byte-identical files.
"""
import collections
import csv
import json
import logging
import os

from .errors import ParameterError, ResultsIOError
from .scenario import BatchSummary, StoppingTable, TrialResult

__all__ = ['PRECISION', 'CrashRow', 'format_mean_std', 'trial_to_dict', 'summary_to_dict', 'stopping_to_dict',
           'trial_csv_header', 'emit_results', 'crash_table', 'stopping_table']

logger = logging.getLogger(__name__)

PRECISION = 6

CrashRow = collections.namedtuple('CrashRow', ['comm_road', 'non_comm_road', 'summary', 'non_comm_id'])
CrashRow.__doc__ = """One line of the crash table: where each car drives and the batch outcome.
The traveling time shown is that of the non-communicating vehicle."""


def _r(value):
    return None if value is None else round(float(value), PRECISION)


def format_mean_std(mean, std, digits=2):
    """``30.78±13.05`` style cell; '-' when there is no value."""
    if mean is None:
        return '-'
    return '{:.{d}f}±{:.{d}f}'.format(mean, std, d=digits)


def _stats(value):
    if value is None:
        return None
    mean, std, count = value
    return collections.OrderedDict([('mean', _r(mean)), ('std', _r(std)), ('count', count)])


def trial_to_dict(result):
    return collections.OrderedDict([
        ('seed', result.seed),
        ('crashed', bool(result.crashed)),
        ('crash_time', _r(result.crash_time)),
        ('crash_pair', None if result.crash_pair is None else list(result.crash_pair)),
        ('traveling_time', collections.OrderedDict((str(k), _r(v)) for k, v in sorted(result.traveling_time.items()))),
        ('stopping_distance', collections.OrderedDict((str(k), _r(v))
                                                      for k, v in sorted(result.stopping_distance.items()))),
    ])


def summary_to_dict(summary, name=None):
    d = collections.OrderedDict()
    if name is not None:
        d['name'] = name
    d['n'] = summary.n
    d['crashes'] = summary.crashes
    d['crash_rate'] = collections.OrderedDict([('mean', _r(summary.crash_rate[0])), ('std', _r(summary.crash_rate[1]))])
    d['traveling_time'] = collections.OrderedDict((str(k), _stats(v)) for k, v in sorted(summary.traveling_time.items()))
    d['stopping_distance'] = collections.OrderedDict((str(k), _stats(v))
                                                     for k, v in sorted(summary.stopping_distance.items()))
    return d


def stopping_to_dict(table):
    cells = []
    for c in table.cells:
        cells.append(collections.OrderedDict([
            ('approach', c.approach), ('scale', _r(c.scale)), ('mean', _r(c.mean)), ('std', _r(c.std)),
            ('n', c.n), ('overruns', c.overruns), ('distances', [_r(d) for d in c.distances])]))
    return collections.OrderedDict([('name', table.name), ('cells', cells)])


def trial_csv_header(trial):
    return (['seed', 'crashed', 'crash_time'] +
            ['traveling_time_{}'.format(k) for k in sorted(trial.traveling_time)] +
            ['stopping_distance_{}'.format(k) for k in sorted(trial.stopping_distance)])


def _csv_value(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return '{:.{p}f}'.format(value, p=PRECISION)
    return str(value)


def _trial_rows(trials):
    yield trial_csv_header(trials[0])
    for t in trials:
        yield [_csv_value(v) for v in
               [t.seed, bool(t.crashed), t.crash_time] +
               [t.traveling_time[k] for k in sorted(t.traveling_time)] +
               [t.stopping_distance[k] for k in sorted(t.stopping_distance)]]


def _stopping_rows(table):
    yield ['approach', 'scale', 'mean', 'std', 'n', 'overruns']
    for c in table.cells:
        yield [_csv_value(v) for v in (c.approach, c.scale, c.mean, c.std, c.n, c.overruns)]


def emit_results(result, path, fmt=None, name=None):
    """
    Writes a TrialResult, a BatchSummary or a StoppingTable.

    :param result: the object to write
    :param path: output file; its extension picks the format when fmt is None
    :param fmt: 'json' or 'csv'. The CSV of a summary lists its trials.
    :param name: optional scenario name stored in summary JSON
    :raise ResultsIOError: when the file cannot be written
    """
    fmt = fmt or os.path.splitext(path)[1].lstrip('.').lower()
    if fmt not in ('json', 'csv'):
        raise ParameterError('unknown results format {!r}'.format(fmt))
    if isinstance(result, TrialResult):
        data, rows = trial_to_dict(result), lambda: _trial_rows([result])
    elif isinstance(result, BatchSummary):
        data, rows = summary_to_dict(result, name), lambda: _trial_rows(result.trials)
    elif isinstance(result, StoppingTable):
        data, rows = stopping_to_dict(result), lambda: _stopping_rows(result)
    else:
        raise TypeError('cannot write results of type {}'.format(type(result).__name__))
    try:
        with open(path, 'w', newline='') as fh:
            if fmt == 'json':
                json.dump(data, fh, indent=2, ensure_ascii=False)
                fh.write('\n')
            else:
                writer = csv.writer(fh, lineterminator='\n')
                writer.writerows(rows())
    except OSError as err:
        raise ResultsIOError('cannot write results to {}: {}'.format(path, err))
    logger.info('wrote %s', path)


def crash_table(rows):
    """
    Crash experiment table: comm-car road, non-comm-car road, crashes in
    percent and the non-comm car's traveling time in seconds.

    :param rows: iterable of CrashRow
    :return: str
    """
    lines = ['{:<20}{:<22}{:>16}{:>22}'.format('comm-car location', 'no-comm-car location', 'crashes (%)',
                                               'traveling time (sec)')]
    for row in rows:
        rate = format_mean_std(*row.summary.crash_rate)
        travel = row.summary.traveling_time.get(row.non_comm_id)
        travel = format_mean_std(*travel[:2], digits=1) if travel else '-'
        lines.append('{:<20}{:<22}{:>16}{:>22}'.format(row.comm_road, row.non_comm_road, rate, travel))
    return '\n'.join(lines) + '\n'


def stopping_table(table):
    """
    Stopping distances in centimetres, one row per approach and one column
    per intersection scale. Overruns are noted after the cell.
    """
    scales = sorted({c.scale for c in table.cells})
    approaches = []
    for c in table.cells:
        if c.approach not in approaches:
            approaches.append(c.approach)
    by_key = {(c.approach, c.scale): c for c in table.cells}
    lines = ['{:<10}'.format('approach') + ''.join('{:>20}'.format('scaled {:g}x'.format(s)) for s in scales)]
    for a in approaches:
        cells = []
        for s in scales:
            c = by_key.get((a, s))
            if c is None or c.mean is None:
                text = '-'
            else:
                text = format_mean_std(c.mean * 100.0, c.std * 100.0, digits=1)
            if c is not None and c.overruns:
                text += ' ({} overrun)'.format(c.overruns)
            cells.append('{:>20}'.format(text))
        lines.append('{:<10}'.format(a) + ''.join(cells))
    return '\n'.join(lines) + '\n'
