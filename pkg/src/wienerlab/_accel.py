"""Numba switch.

Hot loops are written twice: an ``@njit`` version and a pure-numpy version.
Set ``WIENERLAB_DISABLE_NUMBA=1`` to force the numpy path (or run without
numba installed). Both paths are tested against each other.
"""

import os

_DISABLED = os.environ.get("WIENERLAB_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def pick(numba_impl, numpy_impl):
    return numba_impl if HAS_NUMBA else numpy_impl
