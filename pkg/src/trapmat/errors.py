"""Exception hierarchy shared by all trapmat modules."""


class TrapmatError(Exception):
    """Base class for all trapmat errors."""


class ShapeError(TrapmatError):
    """Operand dimensions (or field contexts) do not match."""


class ZeroInverse(TrapmatError):
    """Multiplicative inverse of zero was requested."""


class Singular(TrapmatError):
    """A nonsingular matrix was required but a singular one was given."""


class BadSchedule(TrapmatError):
    """A recursion schedule produced a non-decreasing level sequence."""


class TooLarge(TrapmatError):
    """Materialization requested above the configured dimension cap."""


class BadShape(TrapmatError):
    """Incompatible block/stacking parameters after padding."""


class BadDim(TrapmatError):
    """Dimension below the minimum the operation supports."""


class SingularDiag(TrapmatError):
    """Inverse application requested with a zero diagonal entry."""


class ReductionFailed(TrapmatError):
    """Every repetition of a reduction failed verification."""


class FormatError(TrapmatError):
    """Malformed or unsupported serialized data."""
