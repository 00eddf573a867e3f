"""Optional numba acceleration.

Set ``SPINREDUCE_DISABLE_NUMBA=1`` to force the pure-numpy code paths.
Both paths are always importable so they can be tested against each other.
"""

import os

_disabled = os.environ.get("SPINREDUCE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

# tbb in this image is too old for numba and only produces a warning
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    prange = range

USE_NUMBA = HAVE_NUMBA and not _disabled


def set_threads(count):
    """Cap numba's worker pool; a no-op without numba."""
    if HAVE_NUMBA and count is not None:
        numba.set_num_threads(max(1, min(int(count), numba.config.NUMBA_NUM_THREADS)))


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
