"""Sampler kernel backends.

At import time this package selects the compiled Cython kernels when the
extension is available and otherwise falls back to the NumPy versions.
``BACKEND`` records which one is active; ``SINGULAR_BOUND_PURE_PYTHON=1``
in the environment forces the fallback (used by the benchmark and tests).
"""

import os

from . import fallback

__all__ = [
    "BACKEND",
    "HAVE_COMPILED",
    "fallback",
    "rwm_segment_callback",
    "rwm_segment_completion",
    "rwm_segment_relu",
]

rwm_segment_callback = fallback.rwm_segment_callback

try:
    from . import _speedups  # type: ignore[attr-defined]

    HAVE_COMPILED = True
except ImportError:
    _speedups = None
    HAVE_COMPILED = False

if HAVE_COMPILED and os.environ.get("SINGULAR_BOUND_PURE_PYTHON", "") != "1":
    BACKEND = "compiled"
    rwm_segment_completion = _speedups.rwm_segment_completion
    rwm_segment_relu = _speedups.rwm_segment_relu
else:
    BACKEND = "python"
    rwm_segment_completion = fallback.rwm_segment_completion
    rwm_segment_relu = fallback.rwm_segment_relu
