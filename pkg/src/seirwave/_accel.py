"""Backend selection for the compiled kernels.

Set ``SEIRWAVE_BACKEND=numpy`` to run every kernel as plain Python/numpy
(useful for debugging and for platforms without numba). The default is
``numba`` when it can be imported.
"""
import os

BACKEND = os.environ.get("SEIRWAVE_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ImportError(f"SEIRWAVE_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")

if BACKEND == "numba":
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        BACKEND = "numpy"

USE_NUMBA = BACKEND == "numba"


def kernel(fn):
    """Compile ``fn`` with ``numba.njit`` when the numba backend is active."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn

