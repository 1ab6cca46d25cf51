"""Hot-kernel backend selection: compiled extension when available, numpy otherwise.

Set SLICESIM_PURE_PYTHON=1 to force the numpy fallback. Both backends are
bit-identical on the same inputs (see tests/test_kernels.py), so the choice
never affects simulation results, only speed.
"""

import os

from . import _pykernels

if os.environ.get("SLICESIM_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

contention_round = _impl.contention_round
batch_success_count = _impl.batch_success_count
