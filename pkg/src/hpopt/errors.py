"""Exception hierarchy shared by all hpopt modules."""


class HpoptError(Exception):
    """Base class for every error raised by this package."""


class ParamDomainError(HpoptError, ValueError):
    """A value lies outside the domain of a parameter definition."""


class UnsupportedOperationError(HpoptError, TypeError):
    """The operation is not defined for this kind of parameter."""


class ValidationError(HpoptError, ValueError):
    """A candidate does not fit the experiment's parameter space."""

    def __init__(self, message, dimensions=()):
        super().__init__(message)
        self.dimensions = list(dimensions)


class ContractError(HpoptError, ValueError):
    """A caller broke a documented precondition."""


class DataError(HpoptError, ValueError):
    """Training data is malformed (non-finite, ragged, empty)."""


class NumericalError(HpoptError, ArithmeticError):
    """A numerical routine failed irrecoverably."""


class ConfigurationError(HpoptError, ValueError):
    """A configuration value is invalid."""


class UnsupportedConfigurationError(ConfigurationError):
    """The configuration is valid in isolation but not supported in combination."""


class OptimizationFailure(HpoptError):
    """A local optimizer gave up; callers fall back to the best point seen."""

    def __init__(self, message, reason):
        super().__init__(message)
        self.reason = reason
