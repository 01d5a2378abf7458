"""Backend selection for the hot particle and reduction kernels.

The compiled Cython extension is used when it imports; otherwise the numpy
fallback is used.  Setting ``VKGLAB_PURE_PYTHON=1`` forces the fallback.
"""

import logging
import os

import numpy as np

from . import _fallback

log = logging.getLogger(__name__)

if os.environ.get("VKGLAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"
        log.debug("compiled kernels unavailable, using numpy fallback")


def det_sum(values):
    """Compensated sum in fixed C order; identical inputs give identical bits."""
    a = np.ascontiguousarray(values, dtype=np.float64).ravel()
    return float(_impl.neumaier_sum(a))


def tsc_deposit(pos, weights, n, dx, origin):
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    return _impl.tsc_deposit(pos, weights, int(n), float(dx), float(origin))


def tsc_gather(field, pos, n, dx, origin):
    field = np.ascontiguousarray(field, dtype=np.float64)
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    return _impl.tsc_gather(field, pos, int(n), float(dx), float(origin))
