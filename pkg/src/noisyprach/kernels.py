"""Backend selection for the neighbour-search kernels.

The compiled extension is preferred; the numpy module is a drop-in fallback.
Set ``NOISYPRACH_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("NOISYPRACH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels_c as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

knn_search = _impl.knn_search
knn_merge = _impl.knn_merge
active_knn_mean = _impl.active_knn_mean

__all__ = ["BACKEND", "knn_search", "knn_merge", "active_knn_mean"]
