"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``STREAMSIM_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _purekernels as pure

compiled = None
if os.environ.get("STREAMSIM_PURE", "") in ("", "0"):
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        compiled = None

_impl = compiled or pure
BACKEND = "compiled" if compiled is not None else "python"

levenshtein = _impl.levenshtein
distance_matrix = _impl.distance_matrix
w1_sorted = _impl.w1_sorted

__all__ = ["BACKEND", "levenshtein", "distance_matrix", "w1_sorted", "pure", "compiled"]
