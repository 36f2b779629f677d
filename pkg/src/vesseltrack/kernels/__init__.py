"""Hot per-particle kernels.

Two interchangeable backends implement the same functions:

* ``numba``: ``@njit`` compiled loops (default when numba imports).
* ``numpy``: vectorized pure-numpy fallback.

Set ``VESSELTRACK_DISABLE_NUMBA=1`` before import to force the numpy path.
Both backends consume no randomness; callers pass in any random draws, so the
RNG stream is identical whichever backend runs.
"""

import importlib
import os

from . import _numpy

_FLAG = os.environ.get("VESSELTRACK_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in ("1", "true", "yes", "on")


def _load_numba():
    return importlib.import_module(__name__ + "._numba")


_numba = None
if not NUMBA_DISABLED:
    try:
        _numba = _load_numba()
    except ImportError:  # numba missing or broken
        _numba = None

_active = _numba if _numba is not None else _numpy
BACKEND = "numba" if _numba is not None else "numpy"

camera_loglik = _active.camera_loglik
lidar_loglik = _active.lidar_loglik
systematic_indices = _active.systematic_indices
normalize_log_weights = _active.normalize_log_weights
entropy_bits = _active.entropy_bits
cv_predict = _active.cv_predict


def get_backend(name):
    """Return the kernel module for ``name`` ('numpy' or 'numba')."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        return _numba if _numba is not None else _load_numba()
    raise ValueError(f"unknown backend {name!r}")
