"""Selects the double-double kernel implementation at import time.

The compiled Cython extension is used when it was built and imports
cleanly; otherwise the numpy fallback.  Setting ``CDDSIM_FORCE_PURE=1``
forces the fallback.  Both produce bit-identical results.
"""
from __future__ import annotations

import os

from . import _ddpython

_impl = _ddpython
if os.environ.get("CDDSIM_FORCE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ddkernels as _impl  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _impl = _ddpython

KIND: str = _impl.KIND
gemm = _impl.gemm
jacobi = _impl.jacobi
round_robin = _ddpython.round_robin


def implementations() -> dict:
    """All importable implementations keyed by kind (for tests and benchmarks)."""
    out = {"python": _ddpython}
    try:
        from . import _ddkernels
        out["compiled"] = _ddkernels
    except ImportError:
        pass
    return out
