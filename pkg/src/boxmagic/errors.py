"""Exception types raised across the toolkit."""


class BoxMagicError(Exception):
    """Base class for all toolkit errors."""


class NotInvertible(BoxMagicError, ZeroDivisionError):
    pass


class ConformalPole(BoxMagicError, ZeroDivisionError):
    pass


class GridTooCoarse(BoxMagicError):
    pass


class DomainViolation(BoxMagicError, ValueError):
    pass


class SingularConfiguration(BoxMagicError, ZeroDivisionError):
    pass


class TruncationInsufficient(BoxMagicError):
    pass


class NotInSpan(BoxMagicError, ValueError):
    pass


class NotHarmonic(BoxMagicError, ValueError):
    pass


class SingularW(BoxMagicError, ZeroDivisionError):
    pass


class IndexOutOfRange(BoxMagicError, ValueError):
    pass
