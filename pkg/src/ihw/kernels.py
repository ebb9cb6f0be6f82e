"""Kernel backend selection.

The compiled extension is preferred when importable; set
``IHW_PURE_KERNELS=1`` to force the pure-numpy fallback (used by the
benchmark and by CI environments without a compiler).
"""

import os

from ihw import _purekernels

if os.environ.get("IHW_PURE_KERNELS", "") not in ("", "0"):
    _impl = _purekernels
    BACKEND = "pure"
else:
    try:
        from ihw import _fastkernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _purekernels
        BACKEND = "pure"

SIMPLEX_OPTIMAL = _purekernels.SIMPLEX_OPTIMAL
SIMPLEX_UNBOUNDED = _purekernels.SIMPLEX_UNBOUNDED
SIMPLEX_MAXITER = _purekernels.SIMPLEX_MAXITER

pava_decreasing = _impl.pava_decreasing
upper_hull_indices = _impl.upper_hull_indices
simplex_core = _impl.simplex_core


def get_backend(name):
    """Return a kernel module by name ("pure" or "compiled")."""
    if name == "pure":
        return _purekernels
    if name == "compiled":
        from ihw import _fastkernels

        return _fastkernels
    raise ValueError(f"unknown kernel backend {name!r}")
