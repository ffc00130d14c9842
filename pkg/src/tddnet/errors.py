"""Exception hierarchy shared by all tddnet modules."""


class TddNetError(Exception):
    """Base class for all tddnet errors."""


class InvalidParameter(TddNetError):
    """A configuration field violates its invariant.

    Carries the list of human-readable violation messages in ``errors``.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DomainError(TddNetError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(TddNetError):
    """An iterative method (quadrature, fixed point) failed its tolerance."""


class NumericalError(TddNetError):
    """An intermediate value overflowed or became non-finite."""


class DegenerateDenominator(TddNetError):
    """A closed-form denominator is non-positive; result would be meaningless."""


class DegenerateDeployment(TddNetError):
    """A random deployment drew zero access points; retry with a new seed."""


class NoMeasuredUEs(TddNetError):
    """The inner measurement disk contains no served UE."""


class TruncationError(TddNetError):
    """Markov-chain truncation left too much tail mass."""
