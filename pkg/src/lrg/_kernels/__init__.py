"""Hot-kernel backend selection.

The compiled Cython build (``_ck``) is preferred when importable; the
NumPy fallback (``_py``) is functionally identical.  Set LRG_KERNELS=python
to force the fallback or LRG_KERNELS=c to require the compiled build.
"""

import os

from . import _py

_forced = os.environ.get("LRG_KERNELS", "").strip().lower()

if _forced in ("py", "python"):
    _impl = _py
    BACKEND = "python"
elif _forced in ("c", "ck", "cython"):
    from . import _ck as _impl
    BACKEND = "c"
else:
    try:
        from . import _ck as _impl
        BACKEND = "c"
    except ImportError:
        _impl = _py
        BACKEND = "python"

merge_labels = _impl.merge_labels
row_softmax = _impl.row_softmax
row_softmax_grad = _impl.row_softmax_grad

__all__ = ["BACKEND", "merge_labels", "row_softmax", "row_softmax_grad"]
