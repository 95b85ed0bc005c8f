"""Backend selection for the Monte-Carlo hot loop.

The compiled extension is used when it was built; otherwise, or when
``CFRELAY_PURE_PYTHON=1`` is set, the numpy implementation is used. Both
return identical results up to floating-point summation order.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    if os.environ.get("CFRELAY_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend forced")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def available_backends() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def projections(h_hat, h_err, g_hat, g_err, s_A, s_B, backend: str | None = None):
    """See :func:`cfrelay._kernels_py.projections` for the contract."""
    backend = backend or BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled.projections(h_hat, h_err, g_hat, g_err, s_A, s_B)
    if backend == "python":
        return _kernels_py.projections(h_hat, h_err, g_hat, g_err, s_A, s_B)
    raise ValueError(f"unknown backend {backend!r}")
