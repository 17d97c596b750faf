"""Hot numeric kernels with a compiled core and a numpy fallback.

The compiled extension (``condlab.kernels._core``, Cython) is used when it
built successfully; otherwise the numpy fallback takes over with identical
semantics. Set ``CONDLAB_KERNELS=python`` or ``CONDLAB_KERNELS=cython`` to
force a backend (the latter raises if the extension is missing).
"""

import os

from . import _fallback

_forced = os.environ.get("CONDLAB_KERNELS", "").strip().lower()

if _forced == "python":
    _impl = _fallback
    BACKEND = "python"
elif _forced == "cython":
    from . import _core as _impl

    BACKEND = "cython"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

im2col = _impl.im2col
col2im = _impl.col2im
maxpool2_forward = _impl.maxpool2_forward
maxpool2_backward = _impl.maxpool2_backward
jacobi_sweep = _impl.jacobi_sweep

__all__ = [
    "BACKEND",
    "im2col",
    "col2im",
    "maxpool2_forward",
    "maxpool2_backward",
    "jacobi_sweep",
]
