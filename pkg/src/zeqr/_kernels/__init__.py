"""BM25 hot-kernel dispatch.

The compiled extension is used when it was built; otherwise the numpy
fallback takes over with the same contract. KERNEL_BACKEND records which
one is active.
"""

try:
    from ._bm25 import bm25_accumulate

    KERNEL_BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the install
    from .bm25_py import bm25_accumulate

    KERNEL_BACKEND = "python"

from .bm25_py import bm25_accumulate as bm25_accumulate_py

__all__ = ["bm25_accumulate", "bm25_accumulate_py", "KERNEL_BACKEND"]
