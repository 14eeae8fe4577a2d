"""Backend selection for the Monte Carlo hot loop.

The compiled extension is used when it was built; otherwise the numpy
implementation is used.  Set ``UTILEVAL_BACKEND=python`` to force the
fallback.
"""
from __future__ import annotations

import os

from . import _kernel_py

fallback = _kernel_py.count_misrankings

try:
    from ._kernel import count_misrankings as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and os.environ.get("UTILEVAL_BACKEND", "").lower() not in ("python", "numpy"):
    count_misrankings = compiled
    BACKEND = "compiled"
else:
    count_misrankings = fallback
    BACKEND = "python"

__all__ = ["count_misrankings", "BACKEND", "compiled", "fallback"]
