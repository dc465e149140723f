"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class FedtsadError(Exception):
    """Base class for all package errors."""


class ShapeError(FedtsadError):
    """An operation received tensors with non-conforming shapes."""


class ManifestError(FedtsadError):
    """Flat parameter vector does not match its shape manifest."""


class ConfigError(FedtsadError):
    """Invalid or inconsistent configuration."""


class DataError(FedtsadError):
    """Malformed or missing dataset input."""


class PlanningError(FedtsadError):
    """An anomaly schedule cannot be realized within the test horizon."""


class NumericError(FedtsadError):
    """A numeric failure (non-finite values, divergence) aborted a run."""


class UndefinedMetricError(FedtsadError):
    """A metric is undefined for the given labels (e.g. no positives)."""
