"""Exception hierarchy shared across the toolkit.

Errors are split into two families so that transports (CLI, HTTP service)
can map them uniformly: ``ValidationError`` subclasses mean the input was
malformed, ``DomainError`` subclasses mean the input was well-formed but
the requested quantity does not exist or cannot be computed for it.
"""


class VekitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(VekitError):
    """Malformed or out-of-range input."""


class DomainError(VekitError):
    """Well-formed input for which the requested result is not defined."""


class InvalidInputError(ValidationError):
    """Non-finite or out-of-range numeric input."""


class DimensionError(ValidationError):
    """Mismatched variant counts or a missing study arm."""


class InvalidProfileError(ValidationError):
    """All-or-none mixture proportions violate their constraints."""


class CapacityError(ValidationError):
    """More variants than the immunity-subset bitmask supports."""


class UndefinedVeError(DomainError):
    """A VE ratio has a vanishing denominator.

    ``vanished`` names the probability that was zero, e.g. ``"p_case[1] (reference arm)"``.
    """

    def __init__(self, message: str, vanished: str | None = None):
        super().__init__(message)
        self.vanished = vanished


class NotAvailableError(DomainError):
    """The requested quantity is not defined for this scenario kind."""


class DegenerateDesignError(DomainError):
    """A comparison restricts the design to empty cells."""


class DegenerateReplicateError(DomainError):
    """A simulated replicate produced a zero cell needed by the estimator."""


class UnattainablePowerError(DomainError):
    """No effect size in (0, 1) reaches the target power.

    Carries ``max_power``, the largest power attainable by the design.
    """

    def __init__(self, message: str, max_power: float):
        super().__init__(message)
        self.max_power = max_power


class NoInformationError(DomainError):
    """Every simulated replicate was degenerate."""


class BudgetExceededError(DomainError):
    """A simulation request exceeds the configured draw budget."""
