"""Exception hierarchy shared across the package."""


class PrefMonoError(Exception):
    """Base class for all errors raised by prefmono."""


class InputError(PrefMonoError, ValueError):
    """A numeric input is malformed (nonfinite, negative weight, wrong shape)."""


class DomainViolationError(InputError):
    """A comparison value lies outside its comparison domain."""


class UnsupportedOperationError(PrefMonoError):
    """The requested operation is not defined for this loss, domain or model."""


class NondifferentiableError(PrefMonoError):
    """A derivative was requested at a kink of a nonsmooth loss."""


class NonfiniteResultError(PrefMonoError, ArithmeticError):
    """A computation overflowed or otherwise produced a nonfinite value."""


class PreconditionError(PrefMonoError):
    """A theorem hypothesis required by an audit does not hold.

    ``hypothesis`` names the failed hypothesis.
    """

    def __init__(self, hypothesis: str, message: str):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis


class SingularMatrixError(PrefMonoError, ArithmeticError):
    """A matrix that must be inverted is singular to working precision."""


class ConfigError(PrefMonoError):
    """An experiment configuration failed to parse or validate.

    ``where`` points at the offending field path or ``line:column``.
    """

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where
