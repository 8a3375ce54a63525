"""Evaluation context, approximate results, and the package's exception types."""

from __future__ import annotations

from dataclasses import dataclass, replace

import mpmath


class HalfsignError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HalfsignError, ValueError):
    pass


class PoleError(DomainError):
    def __init__(self, index: int):
        super().__init__(f"gamma has a pole at s = {-index}")
        self.index = index


class AlgorithmSelectionError(HalfsignError):
    pass


class ConvergenceError(HalfsignError):
    pass


class NeedsMoreCoefficients(HalfsignError):
    def __init__(self, needed: int, available: int, what: str = "coefficient table"):
        super().__init__(f"{what} covers m <= {available}, need m <= {needed}")
        self.needed = needed
        self.available = available


class UnsupportedWeightError(HalfsignError):
    pass


class MissingEigenvalueError(HalfsignError):
    def __init__(self, p: int):
        super().__init__(f"no Hecke eigenvalue recorded for p = {p}")
        self.p = p


class ValidationError(HalfsignError):
    pass


@dataclass(frozen=True)
class EvalContext:
    """Working precision and truncation policy for numeric evaluation.

    ``digits`` is the target accuracy in decimal digits. Internally every
    evaluation runs with ``guard`` extra digits, and a result is accepted only
    if its error estimate is at most ``tolerance``.
    """

    digits: int = 50
    tail_safety: float = 10.0
    max_terms: int = 200_000
    guard: int = 20

    def __post_init__(self):
        if self.digits < 5:
            raise DomainError("digits must be at least 5")

    @property
    def working_digits(self) -> int:
        return self.digits + self.guard

    @property
    def bits(self) -> int:
        return int(self.working_digits * 3.33) + 16

    @property
    def tolerance(self) -> float:
        return 10.0 ** (-(self.digits - 10))

    def workdps(self, extra: int = 0):
        return mpmath.workdps(self.working_digits + extra)

    def with_digits(self, digits: int) -> "EvalContext":
        return replace(self, digits=digits)


DEFAULT_CONTEXT = EvalContext()


@dataclass(frozen=True)
class Approx:
    """A numeric value together with an estimate of its absolute error."""

    value: mpmath.mpc
    error: float

    def __complex__(self):
        return complex(self.value)

    def __abs__(self):
        return abs(self.value)
