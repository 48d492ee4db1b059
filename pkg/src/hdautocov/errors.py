"""Exception hierarchy shared by every module of the package."""


class HDAutocovError(Exception):
    """Base class for all package errors."""


class ValidationError(HDAutocovError, ValueError):
    """Malformed user input (unparseable polynomial, non-symmetric input, ...)."""


class DomainError(HDAutocovError, ValueError):
    """Input outside the mathematical domain of an operation."""


class CapacityError(HDAutocovError):
    """A requested computation exceeds a configured size cap."""


class ConfigurationError(HDAutocovError):
    """Inconsistent model or generator configuration."""


class OracleError(HDAutocovError):
    """A value oracle failed while evaluating a partition block."""


class SingularityError(DomainError):
    """A denominator vanished while evaluating a fixed-point residual."""


class NumericalError(HDAutocovError):
    """A numerical routine failed its own accuracy contract."""
