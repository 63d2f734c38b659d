"""Exception hierarchy shared by every module."""


class FracPartsError(Exception):
    """Base class for all library errors."""


class PrecisionExhausted(FracPartsError):
    """A comparison could not be separated within the precision budget.

    Only inputs with declared finite precision (decimal literals) can trigger
    this; the fix is to supply more digits.
    """


class Resonance(FracPartsError):
    """Some enumerated integer vector ``q`` has ``||alpha . q|| == 0``."""

    def __init__(self, q):
        self.q = tuple(int(v) for v in q)
        super().__init__(f"resonance at q={self.q}: ||alpha.q|| = 0")


class NonsquareViolation(FracPartsError, ValueError):
    pass


class ZeroDenominator(FracPartsError, ZeroDivisionError):
    pass


class DimensionMismatch(FracPartsError, ValueError):
    pass


class ParseError(FracPartsError, ValueError):
    def __init__(self, message, position=0):
        self.position = position
        super().__init__(f"{message} (at position {position})")


class OutputCapExceeded(FracPartsError):
    pass


class PairCapExceeded(FracPartsError):
    pass


class OutOfRange(FracPartsError, ValueError):
    pass


class MissingPhi2Q(FracPartsError, ValueError):
    pass


class InvariantViolation(FracPartsError, AssertionError):
    """A mathematical identity that must always hold was found to fail.

    Seeing this means there is a bug, not a property of the input.
    """
