"""Hot-loop kernels with a numba path and a pure-numpy fallback.

The backend is chosen once, at import time, from the ``ARDRECON_BACKEND``
environment variable (``numba`` or ``numpy``). ``numba`` is the default and
silently degrades to ``numpy`` when numba cannot be imported.
"""
import os
import warnings

from . import _numpy

_requested = os.environ.get("ARDRECON_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"ARDRECON_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numba":
    try:
        from . import _numba as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        warnings.warn("numba unavailable, falling back to numpy kernels")
        _impl = _numpy
        BACKEND = "numpy"
else:
    _impl = _numpy
    BACKEND = "numpy"


def implementation(name=None):
    """Return the kernel module for ``name`` (``'numba'``/``'numpy'``) or the active one."""
    if name is None:
        return _impl
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba
        return _numba
    raise ValueError(f"unknown backend {name!r}")


ard_counts = _impl.ard_counts
brandes = _impl.brandes
sweep_positions = _impl.sweep_positions
sweep_intercepts = _impl.sweep_intercepts

LOGISTIC = _numpy.LOGISTIC
PROBIT = _numpy.PROBIT
POISSON = _numpy.POISSON
NEGBIN = _numpy.NEGBIN
LAM_FLOOR = _numpy.LAM_FLOOR

__all__ = ["BACKEND", "implementation", "ard_counts", "brandes",
           "sweep_positions", "sweep_intercepts"]
