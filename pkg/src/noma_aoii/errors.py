"""Exception hierarchy shared by every module."""


class AoiiError(Exception):
    """Base class for all package errors."""


class DomainError(AoiiError, ValueError):
    """An argument lies outside the domain of a numerical kernel."""


class NonConvergence(AoiiError, ArithmeticError):
    """An iterative solver exhausted its iteration budget."""


class StabilityError(DomainError):
    """A queue is unstable (C5 violated: arrival rate not below service rate)."""


class InfeasibleError(AoiiError):
    """No policy satisfies the constraints of an optimization subproblem.

    ``subproblem`` names the failing part ("P1" or "P3") and ``user`` the
    1-based index of the first violating user, when one applies.
    """

    def __init__(self, message, subproblem=None, user=None):
        super().__init__(message)
        self.subproblem = subproblem
        self.user = user


class ConfigError(AoiiError, ValueError):
    """A configuration or experiment file is malformed or out of range."""


class EmptyInput(AoiiError, ValueError):
    """An estimator received no records."""


class UnstableSimulation(ConfigError, StabilityError):
    """A simulation was requested for a network whose queues would grow
    without bound."""
