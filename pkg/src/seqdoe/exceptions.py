"""Exception types raised across the package."""


class DoeError(Exception):
    """Base class for all package errors."""


class UndefinedMetricError(DoeError, ValueError):
    """A pairwise metric was requested on a design with fewer than two points."""


class PhiPOverflowError(DoeError, ArithmeticError):
    """The phi_p criterion diverges because two points coincide."""


class OutOfBoundsError(DoeError, ValueError):
    """A coordinate lies outside its admissible interval."""


class DesignParseError(DoeError, ValueError):
    """A design file could not be parsed.

    Attributes
    ----------
    line : int or None
        1-based line number of the offending row, if known.
    """

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f"{':' if where else 'line '}{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


class UnsupportedDimensionError(DoeError, ValueError):
    """The requested dimension exceeds what a generator supports."""


class InconsistentStateError(DoeError, RuntimeError):
    """A sampler state does not match the design it is applied to."""


class FitError(DoeError, RuntimeError):
    """A metamodel could not be fitted."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(DoeError, ValueError):
    """An experiment configuration is invalid."""
