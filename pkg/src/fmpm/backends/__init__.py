"""Kernel backend selection.

The hot inner loops (particle/grid transfers and the repeated velocity-solve
passes) exist twice: a numba ``@njit`` implementation and a pure-numpy
fallback with identical semantics.  The backend is picked once at import:

* ``FMPM_BACKEND=numpy``  force the numpy fallback
* ``FMPM_BACKEND=numba``  force numba (ImportError if unavailable)
* unset                   numba when importable, else numpy
"""

import os

__all__ = ["kernels", "backend_name", "load_backend"]


def load_backend(name):
    if name == "numpy":
        from . import numpy_impl
        return numpy_impl
    if name == "numba":
        from . import numba_impl
        return numba_impl
    raise ValueError(f"unknown backend {name!r} (expected 'numpy' or 'numba')")


def _select():
    choice = os.environ.get("FMPM_BACKEND", "").strip().lower()
    if choice:
        return load_backend(choice)
    try:
        return load_backend("numba")
    except ImportError:
        return load_backend("numpy")


kernels = _select()
backend_name = kernels.NAME
