"""Pure-numpy implementations of the hot contention kernels.

Must stay bit-identical to the compiled twins in _ckernels.pyx: both take
pre-drawn preamble choices, so no randomness lives here and either backend
yields the same simulation trace.
"""

from __future__ import annotations

import numpy as np


def contention_round(choices: np.ndarray, pool: int) -> np.ndarray:
    """Success mask for one opportunity: a preamble picked exactly once wins."""
    choices = np.ascontiguousarray(choices, dtype=np.int64)
    counts = np.bincount(choices, minlength=pool)
    return counts[choices] == 1


def batch_success_count(choices: np.ndarray, pool: int) -> int:
    """Total winners over a (opportunities x contenders) matrix of choices."""
    choices = np.ascontiguousarray(choices, dtype=np.int64)
    n_opp, n = choices.shape
    offsets = choices + pool * np.arange(n_opp, dtype=np.int64)[:, None]
    counts = np.bincount(offsets.ravel(), minlength=pool * n_opp)
    return int(np.count_nonzero(counts[offsets] == 1))
