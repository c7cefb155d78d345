"""Exception hierarchy shared by all modules."""


class PovmRemapError(Exception):
    """Base class for library errors."""


class ImageIOError(PovmRemapError, OSError):
    """A file could not be read or written."""


class FormatError(PovmRemapError, ValueError):
    """Malformed or unsupported image file."""


class EmptyImageError(PovmRemapError, ValueError):
    pass


class InvalidParamsError(PovmRemapError, ValueError):
    pass


class TooFewDistinctLevels(PovmRemapError, ValueError):
    """The histogram has fewer populated intensities than requested classes."""


class EmDiverged(PovmRemapError, ArithmeticError):
    pass


class InvalidGamma(PovmRemapError, ValueError):
    pass


class DimensionMismatch(PovmRemapError, ValueError):
    pass


class TooSmall(PovmRemapError, ValueError):
    pass


class ZeroInputEntropy(PovmRemapError, ZeroDivisionError):
    pass


class IndexOutOfRange(PovmRemapError, IndexError):
    pass


class DegenerateRangeWarning(UserWarning):
    """Recursive splitting hit a zero-variance range and fell back to midpoints."""
