"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``WALKPOVM_PURE_PYTHON=1``
to force the numpy reference implementation.
"""

import os

from . import _pykernels as python

try:
    if os.environ.get("WALKPOVM_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

active = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

CONVERGED, MAX_ITER, STALLED = python.CONVERGED, python.MAX_ITER, python.STALLED

__all__ = ["BACKEND", "active", "compiled", "python", "CONVERGED", "MAX_ITER", "STALLED"]
