"""Split-search kernel selection.

The compiled extension is used when it imports; otherwise, or when the
``SCAFF_PURE_PYTHON`` environment variable is set, the numpy twin is used.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("SCAFF_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

best_split = _impl.best_split
feature_gains = _impl.feature_gains


def get_backend(name: str):
    """Return the kernel module for ``"python"`` or ``"cython"`` (for benchmarks/tests)."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
