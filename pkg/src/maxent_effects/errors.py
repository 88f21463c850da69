"""Semantic exception hierarchy shared across the package."""


class EstimationError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EstimationError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class DegenerateTableError(EstimationError):
    """A table (or one of its categories) has a zero margin, so the
    closed-form solution is undefined."""


class UndefinedStatisticError(EstimationError):
    """A statistic is undefined for the given data (e.g. a discrimination
    measure on a sample with only one observed class)."""


class ParameterError(EstimationError, ValueError):
    """A configuration or algorithm parameter violates its contract."""


class TableParseError(EstimationError, ValueError):
    """An input file does not conform to the expected table schema."""
