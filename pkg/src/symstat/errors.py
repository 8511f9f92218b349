"""Shared exception types."""


class SymstatError(Exception):
    """Base class for all package errors."""


class UnsupportedModeError(SymstatError):
    """Requested an exact computation on a sampler-backed distribution."""


class BudgetError(SymstatError):
    """An enumeration or replication budget would be exceeded."""


class InvalidArgumentError(SymstatError):
    """Bad argument (duplicate indices, invalid sizes, empty samples...)."""


class DegenerateLinearPartError(SymstatError):
    """The linear part of the statistic carries no variance (sigma^2 ~ 0)."""


class InsufficientSignalError(SymstatError):
    """Not enough points above the Monte Carlo noise floor to fit a rate."""


class CertificationError(SymstatError):
    """A constructed combinatorial object failed its claimed invariant."""
