"""Kernel dispatch: the compiled extension when it imports, numpy otherwise.

Set ``PARAWW_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("PARAWW_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py


def march(E, W, g, starts, types, u0, direction):
    return _impl.march(np.ascontiguousarray(E, dtype=complex),
                       np.ascontiguousarray(W, dtype=complex),
                       np.ascontiguousarray(g, dtype=complex),
                       np.ascontiguousarray(starts, dtype=np.int_),
                       np.ascontiguousarray(types, dtype=np.int_),
                       np.ascontiguousarray(u0, dtype=complex),
                       int(direction))


def kn_apply(K, c):
    """Dense Kohn-Nirenberg application ``out[..., x] = sum_xi K[..., x, xi] c[..., xi]``.

    Kept on BLAS in both backends: a hand-written loop does not beat matmul here.
    """
    return np.matmul(K, c[..., None])[..., 0]


def use_backend(name):
    """Switch backend at runtime (``"cython"`` or ``"python"``); returns the old one."""
    global _impl, BACKEND
    old = BACKEND
    if name == "python":
        _impl, BACKEND = _kernels_py, "python"
    elif name == "cython":
        from . import _kernels
        _impl, BACKEND = _kernels, "cython"
    else:
        raise ValueError(name)
    return old
