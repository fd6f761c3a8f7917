"""Kernel backend selection: numba JIT by default, pure numpy/Python fallback.

The fallback is selected with ``LGCN_BACKEND=numpy`` (the default ``numba``
is used whenever numba imports cleanly).  ``LGCN_THREADS`` caps the numba
thread pool.  Both knobs are read once at import time.
"""

from __future__ import annotations

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    numba = None
    HAVE_NUMBA = False


def _select_backend() -> str:
    requested = os.environ.get("LGCN_BACKEND", "").strip().lower()
    if requested in ("numpy", "python"):
        return "numpy"
    if requested == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("LGCN_BACKEND=numba but numba is not importable")
        return "numba"
    if requested:
        raise RuntimeError(f"unknown LGCN_BACKEND={requested!r} (use 'numba' or 'numpy')")
    return "numba" if HAVE_NUMBA else "numpy"


BACKEND = _select_backend()
USE_NUMBA = BACKEND == "numba"

if USE_NUMBA:
    threads = os.environ.get("LGCN_THREADS", "").strip()
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def backend_name() -> str:
    """Active kernel backend, 'numba' or 'numpy'."""
    return BACKEND


def njit(*args, **kwargs):
    """@njit that compiles under the numba backend and is a no-op otherwise.

    Only used for kernels whose source runs unchanged as plain Python; kernels
    with a genuinely different vectorized fallback dispatch on USE_NUMBA
    instead.
    """
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f
