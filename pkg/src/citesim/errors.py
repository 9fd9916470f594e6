"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class CitesimError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParameterError(CitesimError, ValueError):
    """A parameter or configuration value is out of its valid range."""


class IngestionError(CitesimError, ValueError):
    """An input file could not be parsed into a valid cohort."""


class EmptyCohortError(IngestionError):
    pass


class EmptySupportError(CitesimError, ValueError):
    """Sampling was requested from an index whose total weight is zero."""


class DegenerateKernelError(CitesimError, RuntimeError):
    """The kernel assigns zero total weight to the whole cohort."""


class UndefinedDistanceError(CitesimError, ValueError):
    """Two binned distributions share no bin where both are nonzero."""

    exit_code = 3


class SchemeMismatchError(CitesimError, ValueError):
    """Two binned distributions were produced with different bin grids."""
