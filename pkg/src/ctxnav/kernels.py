"""Kernel backend selection.

The compiled extension is used when importable; set
``CTXNAV_PURE_PYTHON=1`` to force the numpy implementations.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("CTXNAV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def raycast(occ, ox, oy, res, sx, sy, dx, dy, range_max):
    return _impl.raycast(
        np.ascontiguousarray(occ, dtype=np.uint8),
        float(ox), float(oy), float(res), float(sx), float(sy),
        np.ascontiguousarray(dx, dtype=float),
        np.ascontiguousarray(dy, dtype=float),
        float(range_max),
    )


def nondominated(values):
    return np.asarray(_impl.nondominated(np.ascontiguousarray(values, dtype=float)), dtype=bool)


def gauge(front, cands, eps):
    return _impl.gauge(
        np.ascontiguousarray(front, dtype=float),
        np.ascontiguousarray(cands, dtype=float),
        float(eps),
    )
