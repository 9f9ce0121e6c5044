"""Exception hierarchy.

Errors deriving from :class:`InputError` describe bad user input (exit code 2
in the CLI); everything else deriving from :class:`MascotsError` signals an
internal failure (exit code 3).
"""


class MascotsError(Exception):
    """Base class for all package errors."""


class InputError(MascotsError, ValueError):
    """Invalid or malformed input."""


class ParseError(InputError):
    pass


class ShapeError(InputError):
    pass


class EmptyDataset(InputError):
    pass


class LengthError(InputError):
    pass


class LengthMismatch(InputError):
    pass


class InvalidAlphabet(InputError):
    pass


class WindowTooLarge(InputError):
    pass


class SeriesTooShort(InputError):
    pass


class UnknownHash(InputError, KeyError):
    pass


class OutOfBounds(InputError, IndexError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class SchemaVersionError(InputError):
    pass


class EmptyTrace(InputError):
    pass


class NoContainedPattern(MascotsError):
    """The BoRF vector has no positive count."""


class NoSwapAvailable(MascotsError):
    """No replacement pattern exists for the selected word."""


class NonFiniteLoss(MascotsError, FloatingPointError):
    """Surrogate training diverged; lower the learning rate."""
