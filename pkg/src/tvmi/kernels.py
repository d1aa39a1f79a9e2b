"""Backend selection for the sequential kernels.

The compiled extension ``tvmi._kernels`` is used when importable; otherwise,
or when the environment variable ``TVMI_PURE_PYTHON`` is set to a non-empty
value other than ``0``, the NumPy reference in ``tvmi._kernels_py`` is used.
"""
import os

from tvmi import _kernels_py

_force_py = os.environ.get("TVMI_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from tvmi import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

rw_smooth = _impl.rw_smooth
simulate_vecm = _impl.simulate_vecm
kalman_filter = _impl.kalman_filter

__all__ = ["BACKEND", "rw_smooth", "simulate_vecm", "kalman_filter"]
