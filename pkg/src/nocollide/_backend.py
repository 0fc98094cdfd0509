"""Kernel backend selection.

Hot loops (median splits, pairwise collision scans, the assignment oracle)
ship in two flavours: a numba ``@njit`` kernel and a pure-numpy fallback.
The numba path is used when numba imports cleanly and the environment
variable ``NOCOLLIDE_DISABLE_NUMBA`` is unset or falsy.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba as _numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

DISABLED_BY_ENV = os.environ.get("NOCOLLIDE_DISABLE_NUMBA", "").strip().lower() not in _FALSY
USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV

BACKENDS = ("numba", "numpy")


def resolve(backend=None):
    """Return the backend name to use for a call.

    ``None`` picks the process default; an explicit ``"numba"`` request
    raises if numba is not importable.
    """
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


if HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
