"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NoWinnerError -> 3.
"""


class EtopError(Exception):
    """Base class for all errors raised by this package."""


class DataError(EtopError):
    """A dataset is malformed or incompatible with the requested operation."""


class StepError(EtopError):
    """A pipeline step was applied to data that violates its preconditions."""


class ConfigError(EtopError):
    """A search space, manifest, or run configuration is invalid."""


class NoWinnerError(EtopError):
    """A search finished without any pipeline completing end to end."""
