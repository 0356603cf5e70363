"""Select the compiled kernels when available, else the numpy fallback.

Set ``MINNISENS_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("MINNISENS_PURE_PYTHON", "") != "1":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

bias_points = _impl.bias_points
grid_min_difference = _impl.grid_min_difference
grid_min_ratio = _impl.grid_min_ratio
marching_segments = _impl.marching_segments


def backend(name: str):
    """Return the kernel module for ``"python"`` or ``"cython"`` (ImportError if unbuilt)."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
