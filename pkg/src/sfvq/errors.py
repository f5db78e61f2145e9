"""Exception hierarchy.

Every error raised on bad input derives from :class:`SFVQError`; most also
derive from the matching builtin so callers can catch ``ValueError`` etc.
"""


class SFVQError(Exception):
    """Base class for all library errors."""


class ConfigError(SFVQError, ValueError):
    """Invalid parameter: unknown kind, out-of-range order/index, bad config."""


class DimensionError(SFVQError, ValueError):
    """Shape or dimension mismatch between arguments."""


class InsufficientDataError(SFVQError, ValueError):
    """Too few vectors (or codewords) for the requested operation."""


class NumericError(SFVQError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class PermutationError(SFVQError, ValueError):
    """An ordering is not a bijection on the codeword indices."""


class ZeroDirectionError(SFVQError, ValueError):
    """Two codewords coincide, so no direction is defined between them."""


class FormatError(SFVQError):
    """A vector file has the wrong magic or cannot be parsed."""


class LengthError(FormatError):
    """A vector file payload is shorter or longer than its header declares."""
