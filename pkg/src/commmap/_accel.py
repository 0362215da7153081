"""Backend switch for the hot loops.

Set ``COMMMAP_NUMBA=0`` before import to force the pure-numpy path even when
numba is installed.
"""
import os

_FLAG = os.environ.get("COMMMAP_NUMBA", "1").strip().lower()

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off", "")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is present, otherwise a no-op decorator.

    Decorated functions stay importable (and callable, slowly) without numba,
    so the compiled kernels can always be benchmarked against numpy.
    """
    if HAVE_NUMBA:
        from numba import njit as _njit

        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
