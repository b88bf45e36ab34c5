"""
minicity
========

A 2D simulator of a small city for mapping and smart-intersection studies.

Using minicity
--------------
python setup.py install
minicity --help
import minicity

Subpackages
--------------
city, geometry, grid, gridio

vehicle, parameters

lidar, clustering, tracking, scanlog

slam

metrics

v2i

scenario, parser, results

cli, misc
"""

import logging
from functools import wraps
from time import time

__version__ = '1.0.0'

_timing_logger = logging.getLogger(__name__)


def timing(f):
    @wraps(f)
    def wrapper(*args, **kwargs):
        start = time()
        result = f(*args, **kwargs)
        end = time()
        _timing_logger.debug('Elapsed time for %s: %.3f s', f.__name__, end - start)
        return result
    return wrapper


from .errors import *
from .geometry import *
from .grid import *
from .city import *
from .gridio import *
from .parameters import *
from .vehicle import *
from .lidar import *
from .clustering import *
from .tracking import *
from .scanlog import *
from .slam import *
from .metrics import *
from .v2i import *
from .scenario import *
from .parser import *
from .results import *
