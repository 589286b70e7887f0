"""Exception hierarchy shared by all mlfock modules."""

from __future__ import annotations


class MLFockError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MLFockError, ValueError):
    """An argument lies outside the domain of the requested function."""


class IncompatibleSpaceError(MLFockError, ValueError):
    """Two states belong to spaces with different order parameters."""


class ConsistencyError(MLFockError, RuntimeError):
    """A mathematical invariant failed numerically (e.g. lost monotonicity)."""


class WeightOverflowError(MLFockError, OverflowError):
    """A Gamma-weighted term is too large for double precision."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"weight overflow at coefficient index {index}")


class ConvergenceError(MLFockError, ArithmeticError):
    """A series did not meet its stopping criterion.

    The partial sum and the number of terms consumed are kept so callers can
    still report what was computed.
    """

    def __init__(self, message: str, partial: complex | float, terms: int):
        self.partial = partial
        self.terms = terms
        super().__init__(message)
