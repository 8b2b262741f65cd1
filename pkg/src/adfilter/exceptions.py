"""Exception hierarchy shared by every subpackage."""


class AdFilterError(Exception):
    """Base class for all errors raised by adfilter."""


class ShapeError(AdFilterError, ValueError):
    pass


class NotPositiveDefinite(AdFilterError, ArithmeticError):
    pass


class NonScalarRoot(AdFilterError, ValueError):
    pass


class NonFiniteProbe(AdFilterError, ArithmeticError):
    pass


class BlowUp(AdFilterError, ArithmeticError):
    """A forecast produced non-finite values (unstable learned dynamics)."""


class DimTooSmall(AdFilterError, ValueError):
    pass


class DimError(AdFilterError, ValueError):
    pass


class EnsembleTooSmall(AdFilterError, ValueError):
    pass


class StaticObservationRequired(AdFilterError, ValueError):
    """Directly parameterized gains need the same observation operator at every time."""


class GradientBlowUp(AdFilterError, ArithmeticError):
    pass


class DivergedRun(AdFilterError, RuntimeError):
    """Every window of a training run diverged.

    ``partial`` holds whatever curves were collected before giving up.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class EmptyObservation(AdFilterError, ValueError):
    pass


class LinearOnly(AdFilterError, ValueError):
    pass


class ConfigError(AdFilterError, ValueError):
    pass
