"""Optional numba acceleration.

Kernels are written once in a numba-compatible subset of Python.  When numba
is importable and ``GRIDPART_DISABLE_NUMBA`` is unset (or ``0``), ``jit``
compiles them with ``numba.njit``; otherwise they run as plain Python/numpy.
"""

import os

_FLAG = os.environ.get("GRIDPART_DISABLE_NUMBA", "0").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    _numba = None

NUMBA_ENABLED = _numba is not None and _FLAG in ("", "0", "false", "no")


def jit(fn):
    """Compile ``fn`` with ``njit(cache=True)`` when acceleration is enabled."""
    if NUMBA_ENABLED:
        return _numba.njit(cache=True)(fn)
    return fn


def python_impl(fn):
    """Return the uncompiled function behind a (possibly) jitted kernel."""
    return getattr(fn, "py_func", fn)
