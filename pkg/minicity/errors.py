"""Exception types raised by minicity.

Every error derives from MinicityError. Input problems also derive from
ValueError and file problems from OSError, so code catching the builtin
types keeps working.
"""


class MinicityError(Exception):
    """Base class of all minicity errors."""


class LayoutError(MinicityError, ValueError):
    """A city layout is malformed or places geometry outside its bounds."""


class GridFormatError(MinicityError, ValueError):
    """A grid image or its metadata sidecar cannot be read."""


class ParameterError(MinicityError, ValueError):
    """A numeric parameter is outside its allowed range."""


class StateError(MinicityError, ValueError):
    """A vehicle state or command holds non-finite values."""


class GeometryError(MinicityError, ValueError):
    """Degenerate geometry, e.g. a zero-length stop line."""


class MetricError(MinicityError, ValueError):
    """A metric is undefined for the given inputs."""


class ConfigError(MinicityError, ValueError):
    """A scenario or intersection configuration violates its invariants."""


class ResultsIOError(MinicityError, OSError):
    """Results could not be written."""
