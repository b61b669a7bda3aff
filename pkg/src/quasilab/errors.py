"""Exception hierarchy for the quasilab package."""


class QuasilabError(Exception):
    """Base class for all errors raised by quasilab."""


class GridError(QuasilabError):
    """Invalid grid construction (bad sizes, non-positive metric profile, ...)."""


class ResolutionError(QuasilabError):
    """A grid is too coarse for the requested operation."""


class GridMismatchError(QuasilabError):
    """Two fields that must share a grid do not."""


class AxisymmetryError(QuasilabError):
    """A sphere potential that must depend on colatitude only does not."""


class SupportError(QuasilabError):
    """A compactly supported profile does not fit its domain with the guard band."""


class ScheduleError(QuasilabError):
    """An experiment schedule violates its monotonicity contract."""


class ConvergenceError(QuasilabError):
    """An iterative solver failed to reach its tolerance."""


class ConfigError(QuasilabError):
    """Invalid experiment configuration file or values."""
