"""Exception hierarchy shared across the package."""


class AlbenchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AlbenchError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""


class PoolError(AlbenchError):
    """Illegal pool transition, e.g. acquiring an already-labeled index."""


class BudgetError(AlbenchError):
    """Requested acquisition does not fit the pool or the budget."""


class BundleError(AlbenchError):
    """A PredictionBundle is malformed or missing a required field."""


class InvalidDistributionError(BundleError):
    """A probability row is off the simplex beyond tolerance."""


class GeometryError(AlbenchError):
    """Degenerate or out-of-bounds polygon geometry."""


class LearnerError(AlbenchError):
    """Invalid training configuration or state."""


class AdapterError(AlbenchError):
    """External learner adapter misbehaved."""


class AdapterProtocolError(AdapterError):
    """The adapter violated the wire protocol, or returned an error response.

    ``code`` carries the adapter's error code when the adapter itself
    reported the failure (version, protocol, bad_mode, ...).
    """

    def __init__(self, message: str, code: str | None = None) -> None:
        super().__init__(message)
        self.code = code


class AdapterCrashError(AdapterError):
    """The adapter process died mid-session."""
