"""Numba switch.

Set ``TGA_NUMBA=0`` to run the pure-numpy kernels instead of the compiled
ones (useful for debugging, coverage, or platforms without numba).
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("TGA_NUMBA", "1").lower() not in ("0", "false", "no", "off")


def njit(func):
    """``numba.njit(cache=True)`` when available, else the plain function."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)
