"""
Deterministic summation for μ-integrals.

``math.fsum`` returns the correctly rounded sum of its inputs, so the result
does not depend on the enumeration order or on how the cells were split
between threads. That is what makes reports bit-reproducible.
"""

from __future__ import annotations

import math

import numpy as np


def stable_sum(values: np.ndarray) -> float:
    """Correctly rounded sum of a 1-D float array, taken in C index order."""
    flat = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if flat.size == 0:
        return 0.0
    return math.fsum(flat.tolist())
