"""Exceptions raised by linkfair.

All exceptions derive from :class:`LinkfairError` and from a builtin
exception (mostly `ValueError`), so generic handlers keep working.
"""

__all__ = ['LinkfairError', 'InvalidConfigError', 'UnsupportedGeometryError',
           'SingularChannelError', 'InvalidArgumentError', 'InvalidCodeError',
           'InvalidCalibrationError', 'StarvationError',
           'InfeasibleBudgetError', 'InstanceTooLargeError',
           'ResolutionError', 'UndefinedIndexError', 'InsufficientDataError',
           'TraceFormatError', 'ReportIOError']


class LinkfairError(Exception):
    """Base class for all linkfair errors."""


class InvalidConfigError(LinkfairError, ValueError):
    """Configuration value out of range or inconsistent."""


class UnsupportedGeometryError(LinkfairError, ValueError):
    """More receivers than transmit antennas."""


class SingularChannelError(LinkfairError, ValueError):
    """Channel matrix of a subcarrier is (numerically) rank deficient."""

    def __init__(self, subcarrier, condition):
        self.subcarrier = subcarrier
        self.condition = condition
        super().__init__(f"singular channel at subcarrier {subcarrier} "
                         f"(condition number {condition:.3g})")


class InvalidArgumentError(LinkfairError, ValueError):
    """Argument outside the domain of a function."""


class InvalidCodeError(LinkfairError, ValueError):
    """Convolutional code cannot be used (e.g., catastrophic)."""


class InvalidCalibrationError(LinkfairError, ValueError):
    """Utility calibration violates its invariants."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class StarvationError(LinkfairError, ValueError):
    """A receiver cannot reach its minimum utility with any policy."""

    def __init__(self, receiver, u_min):
        self.receiver = receiver
        self.u_min = u_min
        super().__init__(f"receiver {receiver} has no policy with utility "
                         f">= {u_min}")


class InfeasibleBudgetError(LinkfairError, ValueError):
    """Minimum policies together exceed the power budget."""

    def __init__(self, required, total_power):
        self.required = required
        self.total_power = total_power
        super().__init__(f"minimum policies need {required:.6g} W but only "
                         f"{total_power:.6g} W are available")


class InstanceTooLargeError(LinkfairError, ValueError):
    """Exhaustive enumeration guard exceeded."""


class ResolutionError(LinkfairError, ValueError):
    """Power budget grid of the knapsack would be too fine."""


class UndefinedIndexError(LinkfairError, ValueError):
    """Fairness index of an all-zero vector."""


class InsufficientDataError(LinkfairError, ValueError):
    """Too few samples for a statistic."""


class TraceFormatError(LinkfairError, ValueError):
    """Malformed channel trace file."""


class ReportIOError(LinkfairError, OSError):
    """Report files could not be written."""
