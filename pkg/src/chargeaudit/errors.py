"""Exception types shared across the package."""


class ChargeAuditError(Exception):
    """Base class for all package-specific errors."""


class DomainError(ChargeAuditError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DataInconsistencyError(ChargeAuditError):
    """Input data contradicts itself (e.g. an empty feasible density interval)."""


class SchemaError(ChargeAuditError):
    """An input file does not match the expected schema."""
