"""Backend selection for the hot kernels.

Set ``AAGCN_DISABLE_NUMBA=1`` to force the pure-numpy fallback. When numba is
not installed the fallback is used automatically.
"""

import os

_DISABLED = os.environ.get("AAGCN_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator.

    The returned function is only called on the numba path; the numpy
    fallbacks live next to each kernel in ``kernels.py``.
    """
    if HAVE_NUMBA:
        from numba import njit as _njit

        return _njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
