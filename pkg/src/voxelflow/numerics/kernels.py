"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
always available. Selection happens once at import. Set VOXELFLOW_KERNELS
to "python" or "compiled" to force a backend (the benchmark uses this).
"""

import os

from . import _npkernels

_requested = os.environ.get("VOXELFLOW_KERNELS", "auto")

if _requested not in ("auto", "python", "compiled"):
    raise ValueError(f"VOXELFLOW_KERNELS must be auto|python|compiled, got {_requested!r}")

_impl = None
if _requested in ("auto", "compiled"):
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = None

if _impl is None:
    _impl = _npkernels

BACKEND = "compiled" if _impl is not _npkernels else "python"

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool2_forward = _impl.maxpool2_forward
maxpool2_backward = _impl.maxpool2_backward
