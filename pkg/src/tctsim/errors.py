"""Exception hierarchy shared by all simulator modules."""


class TctsimError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(TctsimError):
    """Invalid or unparseable run configuration."""


class DimensionMismatch(TctsimError, ValueError):
    """Operand shapes are incompatible."""


class UnknownLabel(TctsimError, KeyError):
    """A basis label was requested that the state does not carry."""


class NumericalError(TctsimError):
    """Base class for failures of a numerical procedure."""


class ConvergenceFailure(NumericalError):
    pass


class CutoffTooSmall(NumericalError):
    pass


class NoMinimum(NumericalError):
    pass


class NotDispersive(NumericalError):
    pass


class OffResonance(NumericalError):
    pass


class InvariantViolation(NumericalError):
    def __init__(self, time, which, value=None):
        self.time = time
        self.which = which
        self.value = value
        msg = f"density-matrix invariant '{which}' violated at t={time}"
        if value is not None:
            msg += f" (value {value:.3e})"
        super().__init__(msg)


class ZeroNorm(NumericalError):
    pass


class MarkovViolation(NumericalError):
    pass


class EmptyEnsemble(NumericalError):
    pass


class NormUnderflow(NumericalError):
    pass


class EigFailure(NumericalError):
    pass


class NearDefective(UserWarning):
    """Eigenvector matrix is close to singular (vicinity of an exceptional point)."""
