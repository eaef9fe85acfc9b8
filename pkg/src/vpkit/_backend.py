"""Select the compiled kernel module, falling back to pure numpy.

Set ``VPKIT_PURE_PYTHON=1`` to force the fallback. With the compiled module
loaded, ``trig_eval`` still comes from numpy: its leading contraction is a
BLAS product that the compiled loop does not beat (see benchmarks/).
"""
import os
from types import SimpleNamespace

from . import _pykernels

python_kernels = _pykernels
compiled_kernels = None

try:
    if os.environ.get("VPKIT_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _ckernels as compiled_kernels
except ImportError:
    kernels = _pykernels
else:
    kernels = SimpleNamespace(
        NAME=compiled_kernels.NAME,
        support_radius=compiled_kernels.support_radius,
        cancellation_sums=compiled_kernels.cancellation_sums,
        trig_eval=_pykernels.trig_eval,
    )

BACKEND = kernels.NAME
