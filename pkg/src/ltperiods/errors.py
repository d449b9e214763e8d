"""Exceptions shared across the package."""


class PrecisionLoss(ArithmeticError):
    """Known digits are insufficient to decide a zero/nonzero question."""


class NotIrreducible(ValueError):
    """Neither the Eisenstein nor the unramified certificate applies."""


class ZeroDivisor(ZeroDivisionError):
    """Inversion in an etale algebra hit a zero divisor; `factor` splits the modulus."""

    def __init__(self, msg, factor=None):
        super().__init__(msg)
        self.factor = factor


class CarrierTooSmall(ValueError):
    """The carrier field does not contain all requested roots."""


class TruncationUnderflow(ValueError):
    """A coefficient beyond what the operands determine was requested."""


class NotUnit(ArithmeticError):
    pass


class NotDistinguished(ValueError):
    pass


class ConvergenceFailure(ArithmeticError):
    pass


class IntegralityViolation(ArithmeticError):
    pass


class SolveFailure(ArithmeticError):
    pass


class NotADeformation(ValueError):
    pass


class StabilizationFailure(RuntimeError):
    pass


class OutOfRange(ValueError):
    pass
