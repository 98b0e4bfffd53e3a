"""numba switch.

Set WEDGE_FPP_DISABLE_JIT=1 to run every kernel as plain Python/numpy.
The fallback is slow but gives the same numbers; it exists for debugging
and for the kernel benchmark.
"""
import os

JIT_DISABLED = os.environ.get("WEDGE_FPP_DISABLE_JIT", "").strip() not in ("", "0", "false", "False")

if JIT_DISABLED:
    HAS_NUMBA = False
else:
    try:
        import numba  # noqa: F401
        HAS_NUMBA = True
    except ImportError:  # pragma: no cover
        HAS_NUMBA = False


def njit(*args, **kwargs):
    """numba.njit with nogil/cache defaults, or identity when disabled."""
    if HAS_NUMBA:
        import numba
        kwargs.setdefault("nogil", True)
        kwargs.setdefault("cache", True)
        if len(args) == 1 and callable(args[0]):
            return numba.njit(**kwargs)(args[0])
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]
    return lambda fn: fn
