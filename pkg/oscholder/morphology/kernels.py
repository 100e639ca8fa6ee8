"""
kernels.py

Núcleos de extremos sobre ventanas de bola.

* ``naive_extremum``: barrido directo de la plantilla, oráculo exacto para
  cualquier d.
* ``sliding_extrema_1d``: extremo deslizante 1-D en tiempo lineal.
* ``row_decomposed_extremum``: en d = 2 el disco se descompone en filas, cada
  una un intervalo 1-D, y se reutilizan los extremos deslizantes por fila.

Las celdas fuera de la máscara se rellenan con -inf (máximo) o +inf (mínimo),
de modo que nunca ganan la comparación.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Literal, Tuple

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from oscholder.errors import InvalidParameterError
from oscholder.morphology.stencil import BallOffsets

logger = logging.getLogger(__name__)

Extremum = Literal["max", "min"]

_FILL = {"max": -np.inf, "min": np.inf}


def _fill_value(op: Extremum) -> float:
    if op not in _FILL:
        raise InvalidParameterError(f"Unknown extremum '{op}', expected 'max' or 'min'")
    return _FILL[op]


def shifted_view(arr: np.ndarray, offset: Tuple[int, ...], fill: float) -> np.ndarray:
    """Array ``out`` with ``out[x] = arr[x + offset]`` in bounds and ``fill`` elsewhere."""
    out = np.full(arr.shape, fill, dtype=arr.dtype)
    src, dst = [], []
    for k, n in zip(offset, arr.shape):
        k = int(k)
        if abs(k) >= n:
            return out
        if k >= 0:
            src.append(slice(k, n))
            dst.append(slice(0, n - k))
        else:
            src.append(slice(0, n + k))
            dst.append(slice(-k, n))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def masked_input(values: np.ndarray, mask: np.ndarray, op: Extremum) -> np.ndarray:
    return np.where(mask, values, _fill_value(op))


def naive_extremum(padded: np.ndarray, stencil: BallOffsets, op: Extremum) -> np.ndarray:
    """
    Brute-force window scan: reduce ``padded`` over every stencil offset.

    ``padded`` already carries ±inf outside the mask.
    """
    fill = _fill_value(op)
    reduce = np.maximum if op == "max" else np.minimum
    out = np.full(padded.shape, fill, dtype=np.float64)
    for offset in stencil.offsets:
        reduce(out, shifted_view(padded, tuple(offset), fill), out=out)
    return out


def sliding_extrema_1d(
    values: np.ndarray,
    half_width: int,
    op: Extremum = "max",
    axis: int = -1,
) -> np.ndarray:
    """
    Extremum over the window ``[i − w, i + w]`` along one axis, clipped to the array.

    Uses scipy's monotone-wedge filters, linear in the array length and
    independent of the window size.
    """
    if half_width < 0:
        raise InvalidParameterError(f"half_width must be >= 0, got {half_width}")
    fill = _fill_value(op)
    if half_width == 0:
        return np.array(values, dtype=np.float64, copy=True)
    filt = maximum_filter1d if op == "max" else minimum_filter1d
    return filt(
        np.asarray(values, dtype=np.float64),
        size=2 * half_width + 1,
        axis=axis,
        mode="constant",
        cval=fill,
    )


def row_decomposed_extremum(
    padded: np.ndarray, stencil: BallOffsets, op: Extremum
) -> np.ndarray:
    """
    d = 2 fast path: rows of the disk are last-axis intervals; one sliding
    extremum per distinct half-width, shifted along the first axis.
    """
    if padded.ndim != 2:
        raise InvalidParameterError("row_decomposed_extremum only handles 2-D arrays")
    fill = _fill_value(op)
    reduce = np.maximum if op == "max" else np.minimum
    out = np.full(padded.shape, fill, dtype=np.float64)
    rows_by_width: Dict[int, List[int]] = {}
    for k0, width in stencil.row_half_widths().items():
        rows_by_width.setdefault(width, []).append(k0)
    for width, rows in rows_by_width.items():
        filtered = sliding_extrema_1d(padded, width, op, axis=1)
        for k0 in rows:
            reduce(out, shifted_view(filtered, (k0, 0), fill), out=out)
    return out


def fast_extremum(padded: np.ndarray, stencil: BallOffsets, op: Extremum) -> np.ndarray:
    """Dispatch by dimension: sliding window in d=1, row decomposition in d=2, scan otherwise."""
    if padded.ndim == 1:
        return sliding_extrema_1d(padded, stencil.reach, op)
    if padded.ndim == 2:
        return row_decomposed_extremum(padded, stencil, op)
    return naive_extremum(padded, stencil, op)
