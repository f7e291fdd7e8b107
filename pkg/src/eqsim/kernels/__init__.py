"""Numeric hot kernels with a numba-compiled fast path and a numpy fallback.

Backend selection happens once at import time via the EQSIM_BACKEND
environment variable:

    auto   (default) use numba when it imports, else fall back to numpy
    numba  require numba, fail loudly if unavailable
    numpy  force the pure-numpy fallback

``BACKEND`` records which one is active. benchmarks/bench_backends.py
compares the two on training-sized workloads.
"""

import os

from . import numpy_impl
from .modes import (  # noqa: F401  (re-exported for callers)
    MODE_CODES,
    MODE_HYBRID,
    MODE_OFF,
    MODE_V1_ALL,
    MODE_V2_ALL,
    MODE_V2_CLOSE,
)

_requested = os.environ.get("EQSIM_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"EQSIM_BACKEND must be one of auto/numba/numpy, got {_requested!r}"
    )

if _requested == "numpy":
    _impl = numpy_impl
else:
    try:
        from . import numba_impl as _impl
    except ImportError:
        if _requested == "numba":
            raise
        _impl = numpy_impl

BACKEND = "numpy" if _impl is numpy_impl else "numba"

softmax_rows = _impl.softmax_rows
softmax_rows_vjp = _impl.softmax_rows_vjp
itc_loss = _impl.itc_loss
itc_loss_grad = _impl.itc_loss_grad
eq_value = _impl.eq_value
eq_value_grad = _impl.eq_value_grad
pairwise_cosine = _impl.pairwise_cosine
pairwise_cosine_grad = _impl.pairwise_cosine_grad
