"""Exception types shared across the package."""


class CarbonStoreError(Exception):
    """Base class for all package errors."""


class ValidationError(CarbonStoreError, ValueError):
    """Input violates a documented invariant or precondition."""


class OutOfRangeError(ValidationError):
    """Demand level lies outside ``[0, X]`` for the fleet."""


class InfeasibleError(CarbonStoreError):
    """No feasible storage path exists.

    ``stage`` is the 1-based step at which feasibility was lost, or ``None``
    when the failure is not tied to a single step.
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class BudgetError(CarbonStoreError):
    """A brute-force oracle refused an instance that is too large."""


class ParseError(ValidationError):
    """A data file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
