"""Exception hierarchy shared across the package."""


class ReputationModelError(Exception):
    """Base class for all errors raised by :mod:`repinsure`."""


class DomainError(ReputationModelError, ValueError):
    """An argument lies outside the domain of the function."""


class DivergenceError(ReputationModelError, ArithmeticError):
    """The requested expectation or series is infinite."""


class EvaluationError(ReputationModelError, ArithmeticError):
    """An integrand or series term produced a non-finite value."""


class ProtocolError(ReputationModelError):
    """An insurance-certificate transition is not allowed in the current state."""


class HorizonError(ReputationModelError):
    """Simulated runs were truncated by the slot horizon.

    Attributes:
        truncated_runs: indices of the runs that hit the horizon.
    """

    def __init__(self, message: str, truncated_runs=()):
        super().__init__(message)
        self.truncated_runs = tuple(truncated_runs)


class AuditFailure(ReputationModelError):
    """A protocol invariant was violated during an adversarial audit."""


class ConfigError(ReputationModelError, ValueError):
    """An experiment configuration is malformed or names an unknown field."""


class BoundViolationWarning(UserWarning):
    """A configuration violates one of the insurance sizing bounds."""
