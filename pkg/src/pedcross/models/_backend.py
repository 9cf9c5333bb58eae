"""Kernel backend selection.

The compiled extension is preferred when importable; PEDCROSS_PURE=1 forces
the numpy reference kernels.  Both produce bit-identical results (the
extension is built with FP contraction disabled), verified by the kernel
equivalence test suite.
"""

from __future__ import annotations

import os

if os.environ.get("PEDCROSS_PURE", "").strip() not in ("", "0"):
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _speedups as kernels   # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
