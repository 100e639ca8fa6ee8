"""
operators.py

Dilatación (sup sobre bolas), erosión (inf sobre bolas) y el operador de
oscilación osc_r f = sup − inf sobre B_r(x) ∩ D, en variantes de bola abierta
y cerrada.

Todas las funciones devuelven un GridFunction con la misma máscara que la
entrada; solo contribuyen celdas enmascaradas.
"""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np

from oscholder.errors import InvalidParameterError
from oscholder.grid.grid_function import SENTINEL, GridFunction
from oscholder.morphology.kernels import (
    Extremum,
    fast_extremum,
    masked_input,
    naive_extremum,
)
from oscholder.morphology.stencil import (
    DEFAULT_MAX_OFFSETS,
    DEFAULT_TIE_RTOL,
    BallMode,
    ball_offsets,
)

logger = logging.getLogger(__name__)

Kernel = Literal["auto", "naive"]


def _extremum(
    g: GridFunction,
    r: float,
    mode: BallMode | str,
    op: Extremum,
    kernel: Kernel,
    max_offsets: int,
    tie_rtol: float,
) -> np.ndarray:
    stencil = ball_offsets(r, g.spacing, g.dim, mode, max_offsets, tie_rtol)
    padded = masked_input(g.values, g.mask, op)
    if kernel == "naive":
        raw = naive_extremum(padded, stencil, op)
    elif kernel == "auto":
        raw = fast_extremum(padded, stencil, op)
    else:
        raise InvalidParameterError(f"Unknown kernel '{kernel}', expected 'auto' or 'naive'")
    return np.where(g.mask, raw, SENTINEL)


def dilate(
    g: GridFunction,
    r: float,
    mode: BallMode | str = BallMode.OPEN,
    kernel: Kernel = "auto",
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> GridFunction:
    """
    Ball supremum g₁(x) = sup_{y ∈ B_r(x) ∩ D} g(y).

    Parameters
    ----------
    g : GridFunction
        Input function.
    r : float
        Ball radius.
    mode : BallMode or str
        Open or closed ball.
    kernel : {"auto", "naive"}
        ``"auto"`` uses the fast path for d ≤ 2, ``"naive"`` the stencil scan.

    Returns
    -------
    GridFunction
        Same mask as ``g``.
    """
    return g.with_values(_extremum(g, r, mode, "max", kernel, max_offsets, tie_rtol))


def erode(
    g: GridFunction,
    r: float,
    mode: BallMode | str = BallMode.OPEN,
    kernel: Kernel = "auto",
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> GridFunction:
    """Ball infimum g₂(x) = inf_{y ∈ B_r(x) ∩ D} g(y). Same parameters as ``dilate``."""
    return g.with_values(_extremum(g, r, mode, "min", kernel, max_offsets, tie_rtol))


def oscillation(
    g: GridFunction,
    r: float,
    mode: BallMode | str = BallMode.OPEN,
    kernel: Kernel = "auto",
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> GridFunction:
    """
    r-oscillation osc_r g(x) = sup − inf of g over B_r(x) ∩ D.

    Nonnegative on the mask and invariant under g ↦ g + C and g ↦ −g.
    """
    upper = _extremum(g, r, mode, "max", kernel, max_offsets, tie_rtol)
    lower = _extremum(g, r, mode, "min", kernel, max_offsets, tie_rtol)
    return g.with_values(np.where(g.mask, upper - lower, SENTINEL))


def dilate_naive(g: GridFunction, r: float, mode: BallMode | str = BallMode.OPEN, **kwargs) -> GridFunction:
    return dilate(g, r, mode, kernel="naive", **kwargs)


def erode_naive(g: GridFunction, r: float, mode: BallMode | str = BallMode.OPEN, **kwargs) -> GridFunction:
    return erode(g, r, mode, kernel="naive", **kwargs)


def oscillation_naive(g: GridFunction, r: float, mode: BallMode | str = BallMode.OPEN, **kwargs) -> GridFunction:
    return oscillation(g, r, mode, kernel="naive", **kwargs)
