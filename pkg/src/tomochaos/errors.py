"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid configuration file, flag value, or key."""


class NumericalError(Exception):
    """A numerical routine failed to meet its convergence contract."""


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration cap; the result is the
    best feasible iterate found."""
