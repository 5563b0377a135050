"""
Errors - Exception hierarchy shared by the concealment engine and the CLI
"""


class ConcealmentError(Exception):
    """Base class for all errors raised by the concealment tool."""


class ConfigError(ConcealmentError):
    """Invalid configuration value (maps to a usage error on the command line)."""


class SequenceFormatError(ConcealmentError):
    """Raw video file or geometry does not describe whole frames."""


class FrameIndexError(ConcealmentError):
    """Frame index outside the sequence."""


class GeometryMismatchError(ConcealmentError):
    """Loss mask and sequence disagree on geometry."""


class MaskFormatError(ConcealmentError):
    """Malformed loss mask text file."""


class EmptySupportError(ConcealmentError):
    """The support ring around a lost block holds no usable sample."""


class NoSupportError(ConcealmentError):
    """The weighting volume is zero everywhere."""


class DegenerateFitError(ConcealmentError):
    """Training pairs show no decreasing trend or are too few to fit a line."""


class EmptyMaskError(ConcealmentError):
    """A measurement needs at least one damaged block."""


class DumpFormatError(ConcealmentError):
    """Malformed volume dump file."""
