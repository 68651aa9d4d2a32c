"""Exception types shared across the solver."""


class RecondivError(Exception):
    """Base class for all solver errors."""


class DomainError(RecondivError, ValueError):
    """An input lies outside the domain of an operation (unknown agent, bad shape, ...)."""


class ParameterError(RecondivError, ValueError):
    """A tuning parameter is invalid (threshold, distribution, size limit)."""


class PreconditionError(RecondivError):
    """An operation was called on an input that violates its precondition.

    ``witness`` carries a machine-checkable certificate of the violation
    when one is available (e.g. a positive-cost cycle).
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotEFAbleError(PreconditionError):
    """The assignment admits no envy-free payment vector."""


class NoManipulationError(ParameterError):
    """A misreport changes nothing, so there is no manipulation to analyse."""


class InstanceFormatError(RecondivError, ValueError):
    """An instance document could not be parsed or is invalid."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)
