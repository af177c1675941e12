"""Exception types shared across the package."""


class LifesimError(Exception):
    """Base class for package errors."""


class ParameterError(LifesimError):
    """A parameter file is missing, malformed, or violates an invariant."""


class ConfigError(LifesimError):
    """A run configuration is invalid (CLI exit code 2)."""


class ContractViolation(LifesimError):
    """An operation was called outside its contract (e.g. illegal action)."""


class TrainingDiverged(LifesimError):
    """The value loss blew past the divergence detector (CLI exit code 3)."""


class ReformError(LifesimError):
    """A reform overlay names an unknown or unimplemented field path."""
