"""Batch evolution kernels with a compiled fast path.

The compiled extension (`_speedups`, Cython) and the NumPy fallback
(`_fallback`) implement the same four functions on the same array
contracts; one of them is selected here at import time.  Set the
environment variable QUDITDD_BACKEND to "numpy" or "cython" to force a
choice (the default "auto" prefers the compiled kernels when built).
"""

import os

_requested = os.environ.get("QUDITDD_BACKEND", "auto").lower()

if _requested not in ("auto", "numpy", "cython"):
    raise ImportError(f"QUDITDD_BACKEND must be auto, numpy, or cython, not {_requested!r}")

if _requested == "numpy":
    from . import _fallback as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _fallback as _impl

        BACKEND = "numpy"

propagate_batch = _impl.propagate_batch
mldd_phase_batch = _impl.mldd_phase_batch
bare_phase_batch = _impl.bare_phase_batch
fidelity_from_phases = _impl.fidelity_from_phases

__all__ = [
    "BACKEND",
    "propagate_batch",
    "mldd_phase_batch",
    "bare_phase_batch",
    "fidelity_from_phases",
]
