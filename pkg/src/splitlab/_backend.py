"""Select the tree-kernel backend.

The compiled extension is preferred; the pure-Python module is the reference
implementation and the fallback when the extension is unavailable. Setting
SPLITLAB_PURE=1 forces the fallback (used by the equality tests and the
benchmark).
"""

from __future__ import annotations

import os

from . import _pycore

if os.environ.get("SPLITLAB_PURE") == "1":
    _impl = _pycore
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pycore

TreeKernel = _impl.TreeKernel
tree_totals = _impl.tree_totals
wiener_brute_arrays = _impl.wiener_brute_arrays


def backend_name() -> str:
    """"compiled" when the C extension is active, else "python"."""
    return _impl.BACKEND


def pure_kernel():
    """The reference implementation, regardless of the active backend."""
    return _pycore
