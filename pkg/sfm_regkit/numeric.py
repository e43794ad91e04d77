"""Numerics functionality for sfm_regkit utility module."""

import numpy as np

from .err import SfmRegkitError

__all__ = [
    "as_array",
    "as_points",
    "readonly",
    "is_finite",
    "format_float",
    "parse_float",
]


def as_array(obj, array_shape, name='array'):
    """Return a float64 copy of ``obj`` with the requested shape.

    Arguments:
        obj {array_like} -- Input values.
        array_shape {tuple} -- expected shape, ``None`` entries match any
            length along that axis.
        name {string} -- name used in the error message.

    Returns:
        ndarray -- read-only float64 array.

    """
    try:
        arr = np.array(obj, dtype=np.float64)
    except (TypeError, ValueError):
        msg = 'the "{}" is not a numeric array.'.format(name)
        raise SfmRegkitError(msg)

    if arr.ndim != len(array_shape) or any(
            e is not None and e != s for e, s in zip(array_shape, arr.shape)):
        msg = 'the "{}" has shape {} '.format(name, arr.shape)
        msg += 'while {} is expected.'.format(tuple(array_shape))
        raise SfmRegkitError(msg)

    return readonly(arr)


def as_points(obj, name='points'):
    """Return an (n, 3) float64 array of 3D points."""
    return as_array(obj, (None, 3), name=name)


def readonly(arr):
    """Mark a numpy array as immutable and return it."""
    arr.setflags(write=False)
    return arr


def is_finite(arr):
    """bool -- true if every entry of ``arr`` is finite."""
    return bool(np.all(np.isfinite(arr)))


def format_float(x):
    """Return the shortest decimal text that reads back to ``x`` exactly.

    Integral values drop the fractional part (``1.0`` -> ``"1"``),
    infinities are written ``inf`` / ``-inf``.

    Arguments:
        x {float} -- value to format.

    Returns:
        string -- decimal text, always with ``.`` as separator.

    """
    x = float(x)
    if np.isnan(x):
        msg = 'NaN can not be serialized.'
        raise SfmRegkitError(msg)
    if np.isinf(x):
        return 'inf' if x > 0 else '-inf'
    if x == 0.0:
        return '0'
    text = np.format_float_positional(x, unique=True, trim='-')
    # very large or small magnitudes are shorter in scientific form
    sci = np.format_float_scientific(x, unique=True, trim='-')
    return sci if len(sci) < len(text) else text


def parse_float(text):
    """Parse a decimal token, independent of locale.

    Returns:
        float -- the parsed value, ``None`` if ``text`` is not a number.

    """
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        return None
