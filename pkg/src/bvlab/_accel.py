"""Backend selection for the hot kernels.

Numba is used when importable unless ``BVLAB_NO_NUMBA`` is set to a truthy
value, in which case every kernel runs its vectorised numpy twin.
"""
import os

_flag = os.environ.get("BVLAB_NO_NUMBA", "").strip().lower()
DISABLED = _flag in ("1", "true", "yes", "on")

try:
    if DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "error_model": "numpy",
}


def njit(fn):
    """``numba.njit`` with project defaults, or the identity without numba."""
    if numba is None:
        return fn
    return numba.njit(**numba_default)(fn)


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
