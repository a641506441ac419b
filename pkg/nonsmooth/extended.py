"""
Extended-real arithmetic on (-inf, +inf].

+inf absorbs sums and positive scalings, compares as the maximum, and
(+inf) - (+inf) is undefined.
"""
import numpy as np

from .exceptions import ExtendedRealError


def _arrays(*values):
    return [np.asarray(v, dtype=float) for v in values]


def ext_add(a, b):
    a, b = _arrays(a, b)
    if np.isneginf(a).any() or np.isneginf(b).any():
        raise ExtendedRealError("-inf is not an extended-real value here")
    return a + b


def ext_sub(a, b):
    """a - b, defined unless b is +inf."""
    a, b = _arrays(a, b)
    if np.isposinf(b).any():
        raise ExtendedRealError("(+inf) - (+inf) and x - (+inf) are undefined")
    return a - b


def ext_scale(c, a):
    """c·a for a scalar c >= 0, with 0·(+inf) = 0 on the domain convention of proper functions."""
    (a,) = _arrays(a)
    if c < 0:
        raise ExtendedRealError(f"negative scale {c} maps +inf to -inf")
    if c == 0:
        return np.zeros_like(a)
    return c * a


def ext_max(a, b):
    a, b = _arrays(a, b)
    return np.maximum(a, b)


def ext_min(a, b):
    a, b = _arrays(a, b)
    return np.minimum(a, b)
