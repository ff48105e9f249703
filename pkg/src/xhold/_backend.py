"""Select the compiled kernels when available, else the NumPy fallback.

Set ``XHOLD_PURE_PYTHON=1`` to force the fallback (used by the benchmark and
the backend-parity tests).
"""
from __future__ import annotations

import os

from . import _kernels_py

try:
    if os.environ.get("XHOLD_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as kernels  # type: ignore[attr-defined]

    BACKEND = "cython"
except ImportError:
    kernels = _kernels_py
    BACKEND = "python"


def available_backends():
    """Mapping of backend name to kernel module, for parity tests and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
