"""Error module."""

import inspect

__all__ = [
    "SfmRegkitError",
    "FormatError",
    "InputError",
    "GeometryError",
    "SolverError",
    "UsageError",
    "InvalidRotation",
    "DegenerateConfiguration",
    "TooFewCameras",
    "NoFeasibleTriplet",
    "EmptyImage",
    "ImageTooSmall",
    "TooFewImages",
    "ZeroVector",
    "TooLarge",
    "Infeasible",
    "InvalidRow",
    "BadHeader",
    "BadFieldCount",
    "BadNumber",
    "BadRotation",
    "DuplicatePair",
    "SelfPair",
    "DimMismatch",
    "NonFinite",
    "BadMagic",
    "BadDimensions",
    "TruncatedData",
]

_TAG = '\nERROR(@'


class SfmRegkitError(Exception):
    """Raise an exception.

    It raises an exception when receives an error message. Keyword
    arguments are kept as attributes so callers can inspect the failing
    line, column, pair or image id.

    msg {string} -- The error message

    """

    exit_code = 1

    def __init__(self, msg, **context):
        """Constuctor."""
        if msg.startswith(_TAG):
            _msg = msg
        else:
            frame = inspect.currentframe().f_back
            # skip constructors of subclasses
            while frame is not None and frame.f_code.co_name == '__init__':
                frame = frame.f_back
            name = frame.f_code.co_name if frame is not None else '?'
            _msg = _TAG + name + '): ' + msg
        Exception.__init__(self, _msg)
        self.msg = _msg
        self.context = context
        for key, value in context.items():
            setattr(self, key, value)

    def __reduce__(self):
        """Efficient pickling."""
        return _rebuild, (self.__class__, self.msg, self.context)

    def __str__(self):
        """Message string representation."""
        return self.msg


def _rebuild(cls, msg, context):
    return cls(msg, **context)


class FormatError(SfmRegkitError):
    """Malformed external artifact."""

    exit_code = 2


class InputError(SfmRegkitError):
    """Input data violates a metric or graph precondition."""

    exit_code = 2


class GeometryError(SfmRegkitError):
    """Geometric infeasibility."""

    exit_code = 3


class SolverError(SfmRegkitError):
    """Ordering solver cannot produce a tour."""

    exit_code = 4


class UsageError(SfmRegkitError):
    """Invalid combination of options or arguments."""

    exit_code = 64


class InvalidRotation(GeometryError):
    """Rotation matrix is not a proper orthonormal matrix."""


class DegenerateConfiguration(GeometryError):
    """Point set does not determine a similarity transform."""


class TooFewCameras(GeometryError):
    """Fewer than three cameras are posed on both sides."""


class NoFeasibleTriplet(GeometryError):
    """Every camera triplet is degenerate."""


class EmptyImage(InputError):
    pass


class ImageTooSmall(InputError):
    pass


class TooFewImages(InputError):
    pass


class ZeroVector(InputError):
    pass


class TooLarge(SolverError):
    pass


class Infeasible(SolverError):
    pass


class InvalidRow(FormatError):
    pass


class BadHeader(FormatError):
    pass


class BadFieldCount(FormatError):
    pass


class BadNumber(FormatError):
    pass


class BadRotation(FormatError):
    pass


class DuplicatePair(FormatError):
    pass


class SelfPair(FormatError):
    pass


class DimMismatch(FormatError):
    pass


class NonFinite(FormatError):
    pass


class BadMagic(FormatError):
    pass


class BadDimensions(FormatError):
    pass


class TruncatedData(FormatError):
    pass
