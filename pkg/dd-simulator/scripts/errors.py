"""
errors.py - Exception types raised by the DD simulator.

Everything derives from DDError so the CLI can tell configuration problems
(exit 1) apart from numerical failures (exit 2).
"""


class DDError(Exception):
    """Base class for all simulator errors."""


class ConfigError(DDError):
    """Bad or missing configuration (config files, CLI flags)."""


class DimensionError(DDError):
    pass


class ContractError(DDError):
    """An operation was called with inputs that violate its contract."""


class ModelError(DDError):
    pass


class AmplitudeError(DDError):
    """A pulse amplitude would exceed its cap a_max."""


class PulseArgumentError(DDError):
    pass


class DesignFailure(DDError):
    """The pulse optimizer did not reach the requested order.

    The best attempt is kept on the exception so callers can inspect it.
    """

    def __init__(self, message, report=None, shape=None):
        super().__init__(message)
        self.report = report
        self.shape = shape


class ScheduleError(DDError):
    """Pulse windows overlap or fall outside [0, T]."""


class ThetaRangeError(ScheduleError):
    """theta_p would exceed the back-to-back limit (T too small)."""


class ThetaDomainError(ScheduleError):
    """The arcsin argument defining theta_p is larger than 1."""


class AccuracyError(DDError):
    pass


class IntegrabilityError(DDError):
    """The decay integral diverges at small frequency."""

    def __init__(self, message, deficit=None):
        super().__init__(message)
        self.deficit = deficit


class EmptyResultError(DDError):
    pass


class FitFailure(DDError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class EstimationError(DDError):
    pass
