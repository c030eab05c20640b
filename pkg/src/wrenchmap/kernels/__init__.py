"""Hot-kernel backend selection.

The grid update runs once per particle per step and dominates runtime, so
it has a compiled implementation (Cython) with a pure NumPy fallback.
The compiled module is preferred when importable; set WRENCHMAP_KERNELS
to "numpy" or "native" to force a backend.  Both produce bit-identical
grid values (the native build disables FP contraction); only the cached
partition sums may differ in the last few ulps because the summation
order differs.
"""

import os

from wrenchmap.kernels import numpy_backend

_requested = os.environ.get("WRENCHMAP_KERNELS", "").strip().lower()

if _requested == "numpy":
    impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from wrenchmap.kernels import _native as impl

        BACKEND = "native"
    except ImportError:
        if _requested == "native":
            raise
        impl = numpy_backend
        BACKEND = "numpy"


def get_backend(name: str):
    """Return a kernel module by name ("native" or "numpy")."""
    if name == "numpy":
        return numpy_backend
    if name == "native":
        from wrenchmap.kernels import _native

        return _native
    raise ValueError(f"unknown kernel backend: {name!r}")
