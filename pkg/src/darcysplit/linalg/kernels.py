"""Kernel backend selection.

The compiled extension is used when it was built; setting the environment
variable ``DARCYSPLIT_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("DARCYSPLIT_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

csr_matvec = _impl.csr_matvec
ilu0_factor = _impl.ilu0_factor
ilu0_solve = _impl.ilu0_solve


def backends():
    """Available kernel modules keyed by name, compiled one first when present."""
    out = {}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    out["python"] = _kernels_py
    return out
