"""Tree-kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
behaviorally identical, just slower. Set PHISHEVADE_PURE_PYTHON=1 to force
the fallback (used by the benchmark and the equivalence tests).
"""

import os

from . import _kernels_py

if os.environ.get("PHISHEVADE_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
best_split = _impl.best_split
forest_predict = _impl.forest_predict

__all__ = ["BACKEND", "best_split", "forest_predict"]
