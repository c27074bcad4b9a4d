"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``SUPERTILES_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback
if os.environ.get("SUPERTILES_PURE") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback

greedy_fill = _impl.greedy_fill
nearest_squares = _impl.nearest_squares
reference_cells = _impl.reference_cells

RIGHT, UP, LEFT, DOWN = _fallback.RIGHT, _fallback.UP, _fallback.LEFT, _fallback.DOWN


def backends():
    """Every available implementation, keyed by name (for tests and benchmarks)."""
    out = {"python": _fallback}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
