"""
Módulo morphology: operadores sup/inf sobre bolas y oscilación.
"""

from oscholder.morphology.kernels import sliding_extrema_1d
from oscholder.morphology.operators import (
    dilate,
    dilate_naive,
    erode,
    erode_naive,
    oscillation,
    oscillation_naive,
)
from oscholder.morphology.stencil import BallMode, BallOffsets, ball_offsets

__all__ = [
    "BallMode",
    "BallOffsets",
    "ball_offsets",
    "dilate",
    "dilate_naive",
    "erode",
    "erode_naive",
    "oscillation",
    "oscillation_naive",
    "sliding_extrema_1d",
]
