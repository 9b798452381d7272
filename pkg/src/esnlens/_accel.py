"""Numba switch.

Set ``ESNLENS_DISABLE_NUMBA=1`` before import to force the pure-numpy kernels.
``set_backend`` flips the choice at runtime (tests and benchmarks use it).
"""

import os

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


def _env_disabled():
    return os.environ.get("ESNLENS_DISABLE_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
        "on",
    }


_use_numba = NUMBA_AVAILABLE and not _env_disabled()


def use_numba():
    return _use_numba


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` kernels; returns the previous name."""
    global _use_numba
    previous = backend()
    if name == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def backend():
    return "numba" if _use_numba else "numpy"
