"""Exception hierarchy.

Input problems subclass ``ValueError`` so callers can catch them generically;
``BoundViolation`` is kept separate because it signals a broken guarantee,
not bad input.
"""


class UTToeplitzError(Exception):
    pass


class InputError(UTToeplitzError, ValueError):
    pass


class EmptyInput(InputError):
    pass


class SumTooFarFromZero(InputError):
    pass


class PairNotCentered(InputError):
    pass


class TooLarge(InputError):
    pass


class NotMonotone(InputError):
    pass


class LengthMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class SymmetryViolation(InputError):
    pass


class DomainError(InputError):
    pass


class MeasureError(InputError):
    pass


class DensityBelowDelta(MeasureError):
    pass


class NonUnitMass(MeasureError):
    pass


class RefinementInconsistent(UTToeplitzError):
    pass


class NotNilpotentBlock(InputError):
    pass


class InvalidConfig(InputError):
    pass


class ConvergenceFailure(UTToeplitzError):
    pass


class BoundViolation(UTToeplitzError):
    """A guaranteed norm bound failed; ``instance`` holds the offending data."""

    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance or {}
