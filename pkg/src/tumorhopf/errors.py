"""Exception hierarchy shared by all modules."""


class TumorModelError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(TumorModelError, ValueError):
    """Invalid parameters, grid sizes or configuration files."""


class DomainError(TumorModelError, ValueError):
    """Argument outside the domain of a closed-form map."""


class NumericalError(TumorModelError, RuntimeError):
    """A numerical procedure failed to deliver a trustworthy result."""


class NonConvergence(NumericalError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class SingularJacobian(NumericalError):
    pass


class DegenerateCase(NumericalError):
    """kappa or kappa-tilde at beta* too close to zero to classify."""


class HopfNotApplicable(NumericalError):
    """Hopf quantities requested outside the mixed-sign regions."""


class WrongSideOfBetaStar(NumericalError):
    """The requested beta yields a non-positive Hopf frequency."""


class NoCrossing(NumericalError):
    """No sign change of the spectral abscissa on the delay bracket."""


class BlowupError(NumericalError):
    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class InsufficientData(TumorModelError, ValueError):
    """Trace too short for behaviour detection."""
