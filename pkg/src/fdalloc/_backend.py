"""Kernel selection: the compiled extension when present, pure Python otherwise.

Set ``FDALLOC_PURE_PYTHON=1`` to force the fallback (used by the equivalence
tests and the benchmark).
"""
import os

from . import _pykernels as pure

compiled = None
if not os.environ.get("FDALLOC_PURE_PYTHON"):
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

kernels = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

__all__ = ["kernels", "pure", "compiled", "BACKEND"]
