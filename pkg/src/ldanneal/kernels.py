"""Backend selection for the hot loops.

The compiled extension ``ldanneal._kernels`` is used when it imports; otherwise
(or with ``LDANNEAL_BACKEND=python``) the NumPy/pure-Python twins are used.
"""
import os

from . import _pykernels

BACKEND = "python"
impl = _pykernels

if os.environ.get("LDANNEAL_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        impl = _pykernels

energies = impl.energies
local_fields = impl.local_fields
metropolis_sweeps = impl.metropolis_sweeps
enumerate_lowest = impl.enumerate_lowest

__all__ = [
    "BACKEND",
    "energies",
    "local_fields",
    "metropolis_sweeps",
    "enumerate_lowest",
]
