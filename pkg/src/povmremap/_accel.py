"""JIT switch.

Set ``POVMREMAP_PURE_NUMPY=1`` to bypass numba and run the vectorised numpy
kernels instead (useful for debugging and for platforms without numba).
"""

import os

ENV_FLAG = "POVMREMAP_PURE_NUMPY"

try:
    import numba

    HAVE_NUMBA = True
    # the default search tries TBB first and warns on old TBB builds
    if "NUMBA_THREADING_LAYER" not in os.environ and numba.config.THREADING_LAYER == "default":
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None
    HAVE_NUMBA = False


def numba_requested() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and numba_requested()

if HAVE_NUMBA:
    from numba import njit, prange
else:  # pragma: no cover

    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper

    def prange(*args):
        return range(*args)


def default_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def max_threads() -> int:
    if HAVE_NUMBA:
        return int(numba.config.NUMBA_NUM_THREADS)
    return 1
