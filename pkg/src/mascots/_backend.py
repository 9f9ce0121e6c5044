"""Kernel selection.

The compiled extension is used when importable; set ``MASCOTS_PURE_PYTHON=1``
to force the NumPy fallback.
"""

import os

BACKEND = "python"

if os.environ.get("MASCOTS_PURE_PYTHON", "").strip() not in ("", "0"):
    from mascots._kernels_py import encode_windows
else:
    try:
        from mascots._kernels import encode_windows

        BACKEND = "cython"
    except ImportError:  # extension not built
        from mascots._kernels_py import encode_windows

__all__ = ["BACKEND", "encode_windows"]
