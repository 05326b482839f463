"""Kernel backend selection.

The compiled Cython kernel is used when it has been built; otherwise the
pure-Python twin is imported. ``PONPLACE_KERNEL=python`` forces the fallback.
"""
import os

from . import _kernel_py

BACKEND = "python"
_impl = _kernel_py

if os.environ.get("PONPLACE_KERNEL", "").lower() != "python":
    try:
        from . import _kernel as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

OPTIMAL, INFEASIBLE, TIMEOUT = _kernel_py.OPTIMAL, _kernel_py.INFEASIBLE, _kernel_py.TIMEOUT


def backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python") or the default."""
    if name is None:
        return _impl
    if name == "python":
        return _kernel_py
    if name == "cython":
        from . import _kernel
        return _kernel
    raise ValueError(f"unknown kernel backend {name!r}")


evaluate_host = _impl.evaluate_host
partial_bound = _impl.partial_bound
branch_and_bound = _impl.branch_and_bound
host_excess = _impl.host_excess
Evaluator = _impl.Evaluator
