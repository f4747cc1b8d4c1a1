"""Kernel dispatch: compiled extension when built, numpy fallback otherwise.

Set ``SEMIFLOW_LAB_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
uniform_interp = _kernels_py.uniform_interp
holder_pairs_max = _kernels_py.holder_pairs_max

if not os.environ.get("SEMIFLOW_LAB_PURE"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        uniform_interp = _compiled.uniform_interp
        holder_pairs_max = _compiled.holder_pairs_max

__all__ = ["BACKEND", "uniform_interp", "holder_pairs_max"]
