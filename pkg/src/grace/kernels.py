"""Kernel backend selection.

The compiled extension is used when it imports; ``GRACE_PURE_PYTHON=1``
forces the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("GRACE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

exchange = _impl.exchange
euler_update = _impl.euler_update
spectral_apply = _impl.spectral_apply
brute_force = _impl.brute_force
set_num_threads = _impl.set_num_threads


def backend_module(name: str):
    """Return the kernel module for ``name`` in {"cython", "python"}."""
    if name == "python":
        return _kernels_py
    from . import _kernels

    return _kernels
