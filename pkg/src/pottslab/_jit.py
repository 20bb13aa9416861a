"""Numba switch.

Set ``POTTSLAB_DISABLE_NUMBA=1`` before import to route every hot kernel
through its pure-numpy fallback.  Both paths are always importable so the
benchmark and the equivalence tests can call either one explicitly.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _env_disabled() -> bool:
    return os.environ.get("POTTSLAB_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True`` and ``nogil=True`` by default.

    Without numba the decorator returns the function untouched, so the
    kernel body still runs (slowly) as plain Python.
    """
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return _numba.njit(*args, **kwargs)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
