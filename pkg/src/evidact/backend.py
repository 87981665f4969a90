"""Kernel backend selection.

The special-function kernels exist twice: a Cython extension
(``_kernels_cy``) and a pure NumPy fallback (``_kernels_np``) with
identical array signatures and the same algorithm.  The compiled module
is preferred when importable; setting ``EVIDACT_BACKEND`` to ``numpy`` or
``cython`` forces one side (forcing ``cython`` raises if the extension
was not built).  ``benchmarks/kernel_bench.py`` compares the two.
"""

import os

_requested = os.environ.get("EVIDACT_BACKEND", "").strip().lower()

if _requested == "numpy":
    from . import _kernels_np as kernels

    BACKEND_NAME = "numpy"
elif _requested == "cython":
    from . import _kernels_cy as kernels

    BACKEND_NAME = "cython"
elif _requested == "":
    try:
        from . import _kernels_cy as kernels

        BACKEND_NAME = "cython"
    except ImportError:
        from . import _kernels_np as kernels

        BACKEND_NAME = "numpy"
else:
    raise ImportError(
        f"EVIDACT_BACKEND={_requested!r} is not recognized; use 'numpy' or 'cython'"
    )
