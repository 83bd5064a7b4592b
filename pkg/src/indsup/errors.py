"""Exception hierarchy for indsup.

Every error raised on purpose by the library derives from :class:`IndsupError`.
Errors that signal bad user input also derive from :class:`ValueError` so that
generic callers can catch them without importing this module.
"""

from __future__ import annotations

from typing import Any


class IndsupError(Exception):
    """Base class for all library errors."""


class InputError(IndsupError, ValueError):
    """Malformed arguments or data."""


class NegativeWeightError(InputError):
    pass


class ZeroMassError(InputError):
    pass


class LengthMismatchError(InputError):
    pass


class SpaceMismatchError(InputError):
    pass


class IndexOutOfRangeError(InputError, IndexError):
    pass


class EmptyGridError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class SpaceTooLargeError(InputError):
    pass


class CoverageGapError(InputError):
    """A hypothesis table does not assign a label to every instance."""


class EmptyDatasetError(InputError):
    pass


class SameLabelError(InputError):
    pass


class BadSetError(InputError):
    """A concentration set references outcomes outside the annotation space."""


class ZeroVectorError(InputError):
    pass


class BadParamsError(InputError):
    pass


class EmptyAfterConstraintError(InputError):
    pass


class UnknownDemoError(InputError):
    pass


class ScenarioError(InputError):
    """The scenario violates realizability (h0 not in H) or T0 not in the class."""


class CapExceededError(IndsupError):
    """An exhaustive search would exceed its configured size cap."""

    def __init__(self, message: str, size: int, cap: int):
        super().__init__(f"{message} (size {size} > cap {cap}; use mode='random' for a lower bound)")
        self.size = size
        self.cap = cap


class UnboundedLossError(IndsupError):
    """Cross-entropy hits a zero transition entry with positive data probability.

    ``witness`` is ``(transition index, instance, label, outcome)``.
    """

    def __init__(self, message: str, witness: tuple[int, int, int, int] | None = None):
        super().__init__(message)
        self.witness = witness


class NoWrongHypothesisError(IndsupError):
    """Every hypothesis agrees with h0 on the support of the instance distribution."""


class SeparationHoldsError(IndsupError):
    """No tuple in the class has divergence below the requested 1/k."""

    def __init__(self, message: str, gamma: float):
        super().__init__(message)
        self.gamma = gamma


class ConfigError(IndsupError):
    """Configuration parse failure, located by a dotted field path."""

    def __init__(self, path: str, message: str, value: Any = None):
        where = path or "<root>"
        super().__init__(f"config error at {where}: {message}")
        self.path = path
        self.value = value
