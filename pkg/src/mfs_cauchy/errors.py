"""Exception types raised across the package."""


class MfsError(Exception):
    """Base class for all errors raised by :mod:`mfs_cauchy`."""


class GeometryError(MfsError, ValueError):
    """Invalid boundary geometry, point distribution or source placement."""


class SingularityError(MfsError, ValueError):
    """A kernel or exact solution was evaluated at (or next to) a singular point."""


class NoCornerError(MfsError, ArithmeticError):
    """The L-curve is degenerate and has no well-defined corner."""


class SvdConvergenceError(MfsError, ArithmeticError):
    """The Jacobi SVD did not converge within its sweep budget."""


class ConfigError(MfsError, ValueError):
    """A run configuration failed to parse or validate."""
