"""Optional numba acceleration.

Hot kernels are written as plain loops over float64 scalars and arrays so the
same source runs compiled (numba) or interpreted (numpy fallback). Set
``RI3BP_DISABLE_NUMBA=1`` before import to force the fallback path.
"""

import os

DISABLE_ENV = "RI3BP_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(DISABLE_ENV, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by environment")
    import numba as _numba

    NUMBA_ENABLED = True
except ImportError:
    _numba = None
    NUMBA_ENABLED = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


def backend():
    return "numba" if NUMBA_ENABLED else "numpy"
