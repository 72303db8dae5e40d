"""Exception types shared across the package."""


class DecAvgError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(DecAvgError, ValueError):
    """A generator, partitioner or experiment config violates its contract."""


class LoadError(DecAvgError, IOError):
    """A dataset or artifact file is malformed; message names the offending field."""


class PartitionError(DecAvgError, ValueError):
    """A data placement cannot be realized (e.g. not enough samples per class)."""


class ProtocolError(DecAvgError, RuntimeError):
    """An aggregation round received inconsistent or degenerate node state."""


class NumericError(DecAvgError, ArithmeticError):
    """Non-finite values appeared during training; message names the layer."""


class UsageError(DecAvgError, ValueError):
    """An operation was called on inputs that lack a required attribute."""
