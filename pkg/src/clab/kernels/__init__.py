"""Hot convolution kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time:

* ``CLAB_BACKEND=numba`` forces the jitted kernels (error if numba is absent),
* ``CLAB_BACKEND=numpy`` forces the pure-numpy path,
* unset: numba when importable, numpy otherwise.

``benchmarks/bench_kernels.py`` compares the two on the shapes this package
actually runs.
"""

import os
import warnings

from . import numpy_ops

_requested = os.environ.get("CLAB_BACKEND", "").strip().lower()

if _requested not in ("", "numpy", "numba"):
    raise ValueError(
        f"CLAB_BACKEND={_requested!r} not recognized; use 'numpy' or 'numba'"
    )

if _requested == "numpy":
    _impl = numpy_ops
    BACKEND = "numpy"
else:
    try:
        from . import numba_ops as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        warnings.warn("numba unavailable, falling back to pure-numpy kernels")
        _impl = numpy_ops
        BACKEND = "numpy"

conv3x3_forward = _impl.conv3x3_forward
conv3x3_backward = _impl.conv3x3_backward
im2col = _impl.im2col
col2im = _impl.col2im
out_size = numpy_ops.out_size
